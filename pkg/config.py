import os
from contextlib import contextmanager
from dataclasses import dataclass, replace

from dotenv import load_dotenv
from mpmath import mp

from errors import ConfigError

load_dotenv()

# Réglages du laboratoire : variables d'environnement (ou .env), valeurs par défaut sinon
LAB_PRECISION = int(os.getenv('LAB_PRECISION', 53))
LAB_SEED = int(os.getenv('LAB_SEED', 20240601))
LAB_SAMPLES = int(os.getenv('LAB_SAMPLES', 100000))
LAB_GRID = int(os.getenv('LAB_GRID', 512))
LAB_KMAX = int(os.getenv('LAB_KMAX', 64))
LAB_TIE_TOL = float(os.getenv('LAB_TIE_TOL', 1e-12))
LAB_SYNC_TOL = float(os.getenv('LAB_SYNC_TOL', 1e-9))
LAB_MASS_TOL = float(os.getenv('LAB_MASS_TOL', 1e-10))
LAB_MAX_ITER = int(os.getenv('LAB_MAX_ITER', 400))
LAB_WORKERS = int(os.getenv('LAB_WORKERS', 1))
LAB_LOG_LEVEL = os.getenv('LAB_LOG_LEVEL', 'WARNING')

# Seuils du certificat de bijectivité
CONTAINMENT_MIN = 0.999
MASS_BALANCE_REL_TOL = 1e-6
MULTIPLICITY_MAX = 1e-3


@dataclass(frozen=True)
class RunConfig:
    """Paramètres d'une exécution ; la graine est recopiée dans toutes les sorties."""

    n: int = 3
    alpha: object = None
    k: int = None
    v: str = None
    precision: int = LAB_PRECISION
    tie_tol: float = LAB_TIE_TOL
    sync_tol: float = LAB_SYNC_TOL
    mass_tol: float = LAB_MASS_TOL
    max_iter: int = LAB_MAX_ITER
    kmax: int = LAB_KMAX
    samples: int = LAB_SAMPLES
    grid: int = LAB_GRID
    seed: int = LAB_SEED
    workers: int = LAB_WORKERS
    out: str = None
    fmt: str = 'csv'

    @property
    def extended(self):
        return self.precision > 53


def _validate(cfg):
    for name in ('tie_tol', 'sync_tol', 'mass_tol'):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"La tolérance {name} doit être > 0")
    for name in ('max_iter', 'kmax', 'samples', 'grid', 'workers', 'precision'):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} doit être >= 1")
    if cfg.fmt not in ('csv', 'json-record', 'svg'):
        raise ConfigError(f"Format inconnu : {cfg.fmt}")
    return cfg


# RunConfig factory
def get_run_config(**overrides):
    values = {key: val for key, val in overrides.items() if val is not None}
    return _validate(replace(RunConfig(), **values))


@contextmanager
def precision_context(bits):
    """Fixe mp.prec le temps d'un calcul en précision étendue."""
    previous = mp.prec
    mp.prec = max(int(bits), 53)
    try:
        yield
    finally:
        mp.prec = previous
