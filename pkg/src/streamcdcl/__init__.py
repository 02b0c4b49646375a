"""Streaming CDCL solving with a bandit-managed learned-clause cache."""
from .cache import BanditPolicy, ConstraintCache, reward, select_for_tick, update_weights
from .clause import Clause, Literal, Tautology, canonicalize, clause_key
from .encodings import PupInstance, QcInstance, encode_pup, encode_qc
from .engine import INCOHERENT, MODEL, TIMEOUT, Engine, EngineConfig, SolveOutcome
from .generator import Delta, ZipfSampler, gen_double_pup, gen_pup_stream, gen_qc_stream
from .session import COnly, MRestart, PSOnly, RL, Session, Strategy, open_session

__version__ = "0.1.0"
