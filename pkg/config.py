import os

from dotenv import load_dotenv, dotenv_values

from errors import ConfigError

load_dotenv()


def _env_list(key, default):
    raw = os.environ.get(key)
    if not raw:
        return default
    return [int(float(v)) for v in raw.replace(',', ' ').split()]


class Config:
    """Configuration settings for the low-lying zeros workbench"""

    # Flask Configuration
    SECRET_KEY = os.environ.get('SECRET_KEY') or 'change-this-in-production'
    # Keep the run store inside the instance folder to avoid CWD/path mismatches
    _default_db_path = os.path.join(os.path.dirname(__file__), 'instance', 'density_runs.db')
    SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URL') or f"sqlite:///{_default_db_path}"
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    WTF_CSRF_ENABLED = False

    # Application Settings
    APP_NAME = 'Quadratic Family One-Level Density'
    APP_VERSION = '1.0.0'
    DEBUG = os.environ.get('FLASK_ENV') != 'production'

    # Experiment defaults
    FAMILY = os.environ.get('DENSITY_FAMILY', 'even')
    X_GRID = _env_list('DENSITY_X_GRID', [10**3, 10**4, 10**5, 10**6])
    SIGMA = float(os.environ.get('DENSITY_SIGMA', '0.3'))
    TESTFN = os.environ.get('DENSITY_TESTFN', 'fejer')
    PRIME_LIMIT = int(float(os.environ.get('PRIME_LIMIT', '1e7')))
    EULER_PRIME_LIMIT = int(float(os.environ.get('EULER_PRIME_LIMIT', '1e4')))
    WORKERS = int(os.environ.get('WORKERS', str(min(8, os.cpu_count() or 1))))

    # Quadrature
    QUAD_T = float(os.environ.get('QUAD_T', '2000'))
    QUAD_PANELS = int(os.environ.get('QUAD_PANELS', '2000'))
    QUAD_NODES = int(os.environ.get('QUAD_NODES', '16'))
    QUAD_TOL = float(os.environ.get('QUAD_TOL', '1e-5'))
    QUAD_SMALL_TAU = float(os.environ.get('QUAD_SMALL_TAU', '1e-3'))

    # Special functions
    ZETA_EM_CUTOFF = int(os.environ.get('ZETA_EM_CUTOFF', '20'))
    ZETA_BERNOULLI_ORDER = int(os.environ.get('ZETA_BERNOULLI_ORDER', '20'))
    ZETA_TARGET_ERROR = float(os.environ.get('ZETA_TARGET_ERROR', '1e-12'))
    ZETA_MAX_IMAG = float(os.environ.get('ZETA_MAX_IMAG', '200'))

    # Sieve memory budget (bytes of boolean mask held at once)
    SIEVE_MEMORY_BUDGET = int(float(os.environ.get('SIEVE_MEMORY_BUDGET', '6.4e7')))
    SIEVE_MAX_LIMIT = int(float(os.environ.get('SIEVE_MAX_LIMIT', '1e9')))

    # Poisson lab: m-tail budget relative to max(1, |S_M|)
    POISSON_TOL = float(os.environ.get('POISSON_TOL', '1e-2'))

    # Logging
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO').upper()
    LOG_FORMAT = os.environ.get('LOG_FORMAT', '%(asctime)s %(levelname)s %(name)s: %(message)s')

    # Dotted config-file keys and the ExperimentConfig field each one feeds
    FILE_KEYS = {
        'family': ('family', str),
        'x': ('x_grid', lambda v: [int(float(x)) for x in v.replace(',', ' ').split()]),
        'sigma': ('sigma', float),
        'testfn': ('testfn', str),
        'prime_limit': ('prime_limit', lambda v: int(float(v))),
        'workers': ('workers', int),
        'out': ('output_path', str),
        'quad.tol': ('quad_tol', float),
        'quad.T': ('quad_T', float),
        'quad.panels': ('quad_panels', int),
        'quad.nodes': ('quad_nodes', int),
        'quad.small_tau': ('quad_small_tau', float),
    }

    @staticmethod
    def load_file(path):
        """
        Read a plain `key = value` experiment file.
        Returns: dict of ExperimentConfig field overrides
        """
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        overrides = {}
        for key, raw in dotenv_values(path).items():
            if key not in Config.FILE_KEYS:
                raise ConfigError(f"unknown config key '{key}' in {path}",
                                  remedy=f"known keys: {', '.join(sorted(Config.FILE_KEYS))}")
            field, parse = Config.FILE_KEYS[key]
            try:
                overrides[field] = parse(raw or '')
            except ValueError as e:
                raise ConfigError(f"bad value for '{key}': {raw!r} ({e})")
        return overrides

    @staticmethod
    def quadrature_spec(**overrides):
        """
        QuadratureSpec built from the environment defaults.
        A truncation_T override without panels keeps the default panel width.
        """
        import math

        from quadrature import QuadratureSpec

        if overrides.get('truncation_T') is not None and overrides.get('panels') is None:
            overrides['panels'] = int(math.ceil(overrides['truncation_T'] * Config.QUAD_PANELS / Config.QUAD_T))
        settings = dict(
            truncation_T=Config.QUAD_T,
            panels=Config.QUAD_PANELS,
            nodes_per_panel=Config.QUAD_NODES,
            abs_tol=Config.QUAD_TOL,
            small_tau_radius=Config.QUAD_SMALL_TAU,
            workers=Config.WORKERS,
        )
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return QuadratureSpec(**settings)

    @staticmethod
    def zeta_kernel():
        """Default ZetaKernel on the contract domain"""
        from specfun import ZetaKernel

        return ZetaKernel(
            em_cutoff=Config.ZETA_EM_CUTOFF,
            bernoulli_order=Config.ZETA_BERNOULLI_ORDER,
            target_abs_error=Config.ZETA_TARGET_ERROR,
            max_imag=Config.ZETA_MAX_IMAG,
        )
