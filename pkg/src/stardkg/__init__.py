"""Star-topology DKG over non-exportable keystores, with
straight-line-extractable proofs and a desk-scale simulation harness."""

from .algebra import GroupParams, setup
from .fischlin import (
    DleqStatement,
    DlStatement,
    FischlinParams,
    FischlinProof,
    PRODUCTION_PARAMS,
    TEST_PARAMS,
)
from .grocrp import Oracle
from .keybox import KeyBox, SealedBlob
from .sdkg import BaseSession, SessionEnv, acc_sdkg
from .usv import UsvCertificate, UsvHandleTable

__all__ = [
    "BaseSession",
    "DleqStatement",
    "DlStatement",
    "FischlinParams",
    "FischlinProof",
    "GroupParams",
    "KeyBox",
    "Oracle",
    "PRODUCTION_PARAMS",
    "SealedBlob",
    "SessionEnv",
    "TEST_PARAMS",
    "UsvCertificate",
    "UsvHandleTable",
    "acc_sdkg",
    "setup",
]
