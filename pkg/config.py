"""
Run Configuration Module
Loading and validation of the versioned JSON run configuration shared by the
command-line subcommands
"""
import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from dotenv import load_dotenv

from frobenius_data import ClassMap

load_dotenv()

# Configuration
SCHEMA_VERSION = 1
PRIME_CAP = int(os.getenv('STCHECK_PRIME_CAP', '1000000'))

TOP_LEVEL_KEYS = {
    'schema_version', 'spec_path', 'cocycle_path', 'data_source', 'prime_bound', 'n_max', 'seed',
    'num_samples', 'thresholds', 'excluded_primes', 'class_map', 'embedding', 'e_max', 'max_order',
    'histogram_bins', 'provenance',
}
DATA_SOURCE_KEYS = {
    'curve': {'kind', 'coefficients', 'bad_primes'},
    'table': {'kind', 'path'},
    'mc': {'kind', 'num_samples'},
}
THRESHOLD_KEYS = {'z_max', 'ks_max'}
PROVENANCE_KEYS = {'k0', 'k', 'K0', 'k_eps', 'K_e', 'notes'}


class ConfigError(Exception):
    pass


@dataclass
class DataSource:
    kind: str
    coefficients: Optional[List[int]] = None
    bad_primes: List[int] = field(default_factory=list)
    path: Optional[str] = None
    num_samples: Optional[int] = None


@dataclass
class RunConfig:
    spec_path: Optional[str] = None
    cocycle_path: Optional[str] = None
    data_source: Optional[DataSource] = None
    prime_bound: int = 1000
    n_max: int = 6
    seed: Optional[int] = None
    num_samples: int = 100000
    z_max: float = 4.0
    ks_max: float = 0.03
    excluded_primes: List[int] = field(default_factory=list)
    class_map: Optional[ClassMap] = None
    embedding: Union[str, int] = 'total'
    e_max: int = 2
    max_order: int = 64
    histogram_bins: int = 40
    provenance: Dict[str, str] = field(default_factory=dict)
    base_dir: str = '.'

    def require_seed(self, what: str) -> int:
        """The seed, or a ConfigError naming the Monte Carlo step that needs it"""
        if self.seed is None:
            raise ConfigError(f'{what} uses Monte Carlo sampling and needs a seed (config "seed" or --seed)')
        return self.seed

    def require(self, name: str):
        value = getattr(self, name)
        if value is None:
            raise ConfigError(f'config key "{name}" is required for this command')
        return value


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f'unknown key(s) in {where}: {", ".join(unknown)}')


def _int(obj: dict, key: str, default=None, minimum: Optional[int] = None):
    value = obj.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'"{key}" must be an integer, got {value!r}')
    if minimum is not None and value < minimum:
        raise ConfigError(f'"{key}" must be at least {minimum}, got {value}')
    return value


def _resolve(base_dir: str, path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base_dir, path))


def _data_source(obj, base_dir: str) -> Optional[DataSource]:
    if obj is None:
        return None
    if not isinstance(obj, dict) or obj.get('kind') not in DATA_SOURCE_KEYS:
        raise ConfigError(f'data_source.kind must be one of {sorted(DATA_SOURCE_KEYS)}')
    kind = obj['kind']
    _check_keys(obj, DATA_SOURCE_KEYS[kind], f'data_source ({kind})')
    if kind == 'curve':
        coeffs = obj.get('coefficients')
        if not isinstance(coeffs, list) or len(coeffs) != 5 or not all(
                isinstance(c, int) and not isinstance(c, bool) for c in coeffs):
            raise ConfigError('data_source.coefficients must be five integers [a1, a2, a3, a4, a6]')
        return DataSource('curve', coefficients=coeffs, bad_primes=list(obj.get('bad_primes', [])))
    if kind == 'table':
        if not isinstance(obj.get('path'), str):
            raise ConfigError('data_source.path must be a file path')
        return DataSource('table', path=_resolve(base_dir, obj['path']))
    return DataSource('mc', num_samples=_int(obj, 'num_samples', None, minimum=1))


def parse_config(obj: dict, base_dir: str = '.', prime_cap: Optional[int] = None) -> RunConfig:
    """
    Validate a decoded config object.

    Args:
        obj: the decoded JSON object
        base_dir: directory relative paths are resolved against
        prime_cap: hard cap for prime_bound (STCHECK_PRIME_CAP by default)

    Returns:
        RunConfig
    """
    if not isinstance(obj, dict):
        raise ConfigError('config must be a JSON object')
    _check_keys(obj, TOP_LEVEL_KEYS, 'config')
    if obj.get('schema_version') != SCHEMA_VERSION:
        raise ConfigError(f'schema_version must be {SCHEMA_VERSION}, got {obj.get("schema_version")!r}')

    cap = prime_cap or PRIME_CAP
    prime_bound = _int(obj, 'prime_bound', 1000, minimum=2)
    if prime_bound > cap:
        raise ConfigError(f'prime_bound {prime_bound} exceeds the cap {cap} (STCHECK_PRIME_CAP)')

    thresholds = obj.get('thresholds', {})
    if not isinstance(thresholds, dict):
        raise ConfigError('thresholds must be an object')
    _check_keys(thresholds, THRESHOLD_KEYS, 'thresholds')
    try:
        z_max = float(thresholds.get('z_max', 4.0))
        ks_max = float(thresholds.get('ks_max', 0.03))
    except (TypeError, ValueError):
        raise ConfigError('thresholds must be numbers') from None

    class_map = None
    if obj.get('class_map') is not None:
        try:
            class_map = ClassMap.from_json(obj['class_map'])
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ConfigError(f'class_map must be {{"modulus": N, "classes": {{residue: label}}}}: {e}') from None

    embedding = obj.get('embedding', 'total')
    if embedding not in ('total', 1, 2):
        raise ConfigError(f'embedding must be "total", 1 or 2, got {embedding!r}')

    provenance = obj.get('provenance', {})
    if not isinstance(provenance, dict):
        raise ConfigError('provenance must be an object')
    _check_keys(provenance, PROVENANCE_KEYS, 'provenance')

    seed = _int(obj, 'seed', None, minimum=0)
    if seed is not None and seed >= 2 ** 64:
        raise ConfigError('seed must fit in 64 bits')

    excluded = obj.get('excluded_primes', [])
    if not isinstance(excluded, list) or not all(isinstance(p, int) for p in excluded):
        raise ConfigError('excluded_primes must be a list of integers')

    config = RunConfig(
        spec_path=_resolve(base_dir, obj.get('spec_path')),
        cocycle_path=_resolve(base_dir, obj.get('cocycle_path')),
        data_source=_data_source(obj.get('data_source'), base_dir),
        prime_bound=prime_bound,
        n_max=_int(obj, 'n_max', 6, minimum=1),
        seed=seed,
        num_samples=_int(obj, 'num_samples', 100000, minimum=1),
        z_max=z_max,
        ks_max=ks_max,
        excluded_primes=sorted(set(excluded)),
        class_map=class_map,
        embedding=embedding,
        e_max=_int(obj, 'e_max', 2, minimum=0),
        max_order=_int(obj, 'max_order', 64, minimum=1),
        histogram_bins=_int(obj, 'histogram_bins', 40, minimum=1),
        provenance={k: str(v) for k, v in provenance.items()},
        base_dir=base_dir,
    )
    if config.data_source is not None and config.data_source.kind == 'mc':
        config.require_seed('the mc data source')
    return config


def load_config(path, seed: Optional[int] = None, prime_cap: Optional[int] = None) -> RunConfig:
    """Read, validate and apply the --seed override; JSON syntax errors keep their line numbers"""
    with open(path, encoding='utf-8') as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f'{path}: line {e.lineno} column {e.colno}: {e.msg}') from None
    if seed is not None and isinstance(obj, dict):
        obj = dict(obj, seed=seed)
    return parse_config(obj, os.path.dirname(os.path.abspath(path)), prime_cap)
