"""Synthetic annotated corpus.

Mirrors the shape of the evaluation setup: a 32-term vocabulary split
across three annotation families (14 radiology, 8 endoscopy, 10 emotion),
a configurable patient population where every patient owns at least one
file, and one scripted "appointment" patient whose corpus is rigged so the
standard demo queries hit known documents (7 match pneumonia OR covid-19).

Every file carries a unique 32-byte plaintext canary both inside its
content and in its filename; leakage tests scan server storage for them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RADIOLOGY = [
    "covid-19", "pneumonia", "normal-chest", "atelectasis", "cardiomegaly",
    "consolidation", "edema", "effusion", "emphysema", "fibrosis",
    "infiltration", "nodule", "pneumothorax", "opacity",
]
ENDOSCOPY = [
    "polyp", "esophagitis", "ulcerative-colitis", "normal-cecum",
    "normal-pylorus", "normal-z-line", "dyed-lifted-polyp", "dyed-resection-margin",
]
EMOTION = [
    "happy", "sad", "angry", "fearful", "disgusted",
    "surprised", "neutral", "contempt", "calm", "confused",
]

VOCABULARY = RADIOLOGY + ENDOSCOPY + EMOTION
FAMILIES = {"radiology": RADIOLOGY, "endoscopy": ENDOSCOPY, "emotion": EMOTION}

CANARY_BYTES = 32


@dataclass
class FileSpec:
    filename: str
    content: bytes
    keywords: set[str]
    canary: str


@dataclass
class PatientSpec:
    patient_id: str
    files: list[FileSpec] = field(default_factory=list)


@dataclass
class Population:
    patients: list[PatientSpec]
    vocabulary: list[str]

    @property
    def total_files(self) -> int:
        return sum(len(p.files) for p in self.patients)

    def canaries(self) -> list[str]:
        return [f.canary for p in self.patients for f in p.files]


def _canary(rng: np.random.Generator) -> str:
    return bytes(rng.integers(0, 256, 16, dtype=np.uint8)).hex()  # 32 ascii bytes


def _make_file(rng: np.random.Generator, stem: str, keywords: set[str],
               size: int = 2048) -> FileSpec:
    canary = _canary(rng)
    filename = f"{stem}-{canary}.png"
    body = bytes(rng.integers(0, 256, size, dtype=np.uint8))
    cut = int(rng.integers(0, size))
    content = body[:cut] + canary.encode() + body[cut:]
    return FileSpec(filename=filename, content=content, keywords=keywords, canary=canary)


def _random_keywords(rng: np.random.Generator) -> set[str]:
    family = list(FAMILIES)[int(rng.integers(0, len(FAMILIES)))]
    pool = FAMILIES[family]
    count = int(rng.integers(1, 4))
    return set(rng.choice(pool, size=min(count, len(pool)), replace=False))


def _appointment_patient(rng: np.random.Generator, patient_id: str) -> PatientSpec:
    """20 files; exactly 7 match pneumonia OR covid-19; 5 are annotated happy."""
    files = []
    for i in range(4):
        files.append(_make_file(rng, f"xray-{i}", {"pneumonia"}))
    for i in range(2):
        files.append(_make_file(rng, f"ct-{i}", {"covid-19"}))
    files.append(_make_file(rng, "xray-dual", {"pneumonia", "covid-19"}))
    for i in range(5):
        files.append(_make_file(rng, f"portrait-{i}", {"happy"}))
    fillers = [
        {"polyp"}, {"esophagitis"}, {"normal-cecum"}, {"sad"},
        {"neutral"}, {"normal-chest"}, {"cardiomegaly"}, {"effusion"},
    ]
    for i, words in enumerate(fillers):
        files.append(_make_file(rng, f"misc-{i}", set(words)))
    assert len(files) == 20
    return PatientSpec(patient_id=patient_id, files=files)


def generate_population(seed: int, n_patients: int = 50,
                        mean_files: float = 13.71,
                        total_files: int | None = None) -> Population:
    """Seeded population; the first patient is the scripted appointment patient.

    With `total_files` set, file counts are drawn to sum to it (paper-scale
    runs); otherwise each patient draws around `mean_files`, minimum 1.
    """
    rng = np.random.default_rng(seed)
    patients = [_appointment_patient(rng, "pt-0000")]
    remaining = None if total_files is None else max(total_files - 20, n_patients - 1)
    for i in range(1, n_patients):
        if remaining is not None:
            left = n_patients - 1 - i
            hi = max(2, int(2 * remaining / max(left + 1, 1)))
            count = int(rng.integers(1, hi + 1))
            count = min(count, remaining - left) if left else max(1, remaining)
            remaining -= count
        else:
            count = max(1, int(rng.poisson(mean_files - 1)) + 1)
        spec = PatientSpec(patient_id=f"pt-{i:04d}")
        for j in range(count):
            spec.files.append(_make_file(rng, f"file-{j}", _random_keywords(rng)))
        patients.append(spec)
    return Population(patients=patients, vocabulary=list(VOCABULARY))
