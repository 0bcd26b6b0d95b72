"""Patient and practitioner clients plus their localhost agent APIs."""

from .agent import create_patient_agent, create_practitioner_agent
from .patient import PatientClient, ReviewReport
from .practitioner import PractitionerClient, build_query, sanitize_filename

__all__ = [
    "PatientClient",
    "PractitionerClient",
    "ReviewReport",
    "build_query",
    "create_patient_agent",
    "create_practitioner_agent",
    "sanitize_filename",
]
