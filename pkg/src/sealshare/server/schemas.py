"""Request/response schemas for the proxy API.

All models forbid unknown fields, and every field that carries a ciphertext
container is checked at the schema layer: a blob whose header declares the
decryption-key kind is rejected before any handler code runs. There is no
field anywhere that deserializes a decryption key or a re-encryption
secret scalar on its own.
"""

from __future__ import annotations

import base64

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..fhe import containers

MAX_INLINE_B64 = 11 * 1024 * 1024  # base64 of ~8 MiB
# registration is the one call allowed to carry large key material inline,
# since chunked uploads require a token the registrant does not have yet
MAX_KEY_B64 = 128 * 1024 * 1024


def _decode_b64(value: str, what: str, limit: int = MAX_INLINE_B64) -> bytes:
    if len(value) > limit:
        raise ValueError(f"{what} exceeds the inline body limit; use chunked upload")
    try:
        return base64.b64decode(value, validate=True)
    except Exception as exc:
        raise ValueError(f"{what} is not valid base64") from exc


def _reject_secret_containers(value: str, what: str, limit: int = MAX_INLINE_B64) -> str:
    blob = _decode_b64(value, what, limit)
    if blob[:4] == containers.MAGIC:
        try:
            _, _, _, _, kind = containers.peek_header(blob)
        except Exception:
            return value  # malformed headers fail later with a clear error
        if kind == containers.KIND_DEC_KEY:
            raise ValueError(f"{what}: decryption-key containers are not accepted")
    return value


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ids become metadata path segments; dots/brackets would break the leakage audit
ID_PATTERN = r"^[A-Za-z0-9_:-]{1,128}$"


class RegisterPatient(StrictModel):
    patient_id: str = Field(pattern=ID_PATTERN)
    pre_public: str
    fhe_enc_key: str
    fhe_eval_key: str

    @field_validator("pre_public", "fhe_enc_key", "fhe_eval_key")
    @classmethod
    def no_secret_material(cls, v, info):
        return _reject_secret_containers(v, info.field_name, MAX_KEY_B64)


class RegisterPractitioner(StrictModel):
    practitioner_id: str = Field(pattern=ID_PATTERN)
    pre_public: str

    @field_validator("pre_public")
    @classmethod
    def no_secret_material(cls, v, info):
        return _reject_secret_containers(v, info.field_name)


class DocumentUpload(StrictModel):
    doc_id: str = Field(pattern=ID_PATTERN)
    dem: str | None = None          # inline base64, bodies <= 8 MiB
    dem_ref: str | None = None      # or a blob staged via chunked upload
    capsule: str
    name_dem: str
    name_capsule: str

    @field_validator("dem", "capsule", "name_dem", "name_capsule")
    @classmethod
    def no_secret_material(cls, v, info):
        if v is None:
            return v
        return _reject_secret_containers(v, info.field_name)


class UploadBatch(StrictModel):
    docs: list[DocumentUpload]
    index: str | None = None
    index_ref: str | None = None

    @field_validator("index")
    @classmethod
    def no_secret_material(cls, v, info):
        if v is None:
            return v
        return _reject_secret_containers(v, info.field_name)


class ReplaceIndex(StrictModel):
    index: str | None = None
    index_ref: str | None = None

    @field_validator("index")
    @classmethod
    def no_secret_material(cls, v, info):
        if v is None:
            return v
        return _reject_secret_containers(v, info.field_name)


class SubmitSearch(StrictModel):
    patient_id: str
    query: str

    @field_validator("query")
    @classmethod
    def no_secret_material(cls, v, info):
        return _reject_secret_containers(v, info.field_name)


class GrantBody(StrictModel):
    granted_docs: list[str]
    rekey: str
    idempotency_key: str | None = None

    @field_validator("rekey")
    @classmethod
    def no_secret_material(cls, v, info):
        return _reject_secret_containers(v, info.field_name)


class DeclineBody(StrictModel):
    idempotency_key: str | None = None


class RevokeBody(StrictModel):
    request_id: str | None = None
    practitioner_id: str | None = None
    idempotency_key: str | None = None


class ChunkedUploadStart(StrictModel):
    total_size: int = Field(gt=0, le=64 * 1024 * 1024 * 1024)
