"""
Experiment documents: JSON in, validated ExperimentConfig out.

Validation runs through Django forms, one per block of the document
(top level, ``sweep``, ``reference``). Unknown keys are rejected up front;
every problem is reported under its dotted key path.
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from django import forms
from django.conf import settings

from .exceptions import ConfigError, DomainError
from .evolve import default_stride
from .lattice import LatticeParams

logger = logging.getLogger(__name__)

MODELS = ('nonreciprocal', 'hermitian', 'creutz')
OUTPUTS = ('trajectory', 'averages', 'period', 'heatmap', 'spectrum', 'defect')
SWEEP_PARAMETERS = ('i_in', 'gamma0', 'gammas', 'kappa', 'nu', 'i_sat')
PARAM_FIELDS = ('n_cells', 'kappa', 'nu', 'gamma0', 'gammas', 'i_sat')


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    min: float
    max: float
    count: int
    spacing: str = 'log'

    def values(self) -> tuple[float, ...]:
        if self.spacing == 'log':
            grid = np.geomspace(self.min, self.max, self.count)
        else:
            grid = np.linspace(self.min, self.max, self.count)
        return tuple(float(v) for v in grid)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: str
    params: LatticeParams
    i_in: float
    t_final: float
    dt: float
    stride: int
    window: tuple[float, float]
    t_transient: float
    gamma_crit: float
    outputs: tuple[str, ...]
    sweep: SweepAxis | None = None
    profile: tuple[float, ...] | None = None
    reference: tuple[tuple[str, float], ...] = field(default=())
    store_amplitudes: bool = False

    def reference_params(self) -> LatticeParams:
        """Parameters of the comparison run used by hermitian-compare."""
        return self.params.with_changes(**dict(self.reference))

    def with_value(self, parameter: str, value: float) -> 'ExperimentConfig':
        """Copy with one sweep parameter set; the stride and gamma_crit stay as configured."""
        if parameter == 'i_in':
            return replace(self, i_in=value, sweep=None)
        return replace(self, params=self.params.with_changes(**{parameter: value}), sweep=None)


def default_gamma_crit(model: str, params: LatticeParams) -> float:
    if model == 'hermitian':
        return params.kappa - params.nu
    return params.gamma_crit


class NumberListField(forms.JSONField):
    """A JSON list of finite numbers."""

    def __init__(self, *, length=None, **kwargs):
        self.length = length
        super().__init__(**kwargs)

    def clean(self, value):
        value = super().clean(value)
        if value is None:
            return None
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise forms.ValidationError('expected a list of numbers')
        if not all(math.isfinite(v) for v in value):
            raise forms.ValidationError('numbers must be finite')
        if self.length is not None and len(value) != self.length:
            raise forms.ValidationError(f'expected exactly {self.length} numbers')
        return tuple(float(v) for v in value)


class StrictFloatField(forms.FloatField):
    """FloatField that refuses strings and booleans coming from JSON."""

    def to_python(self, value):
        if isinstance(value, (bool, str)):
            raise forms.ValidationError('expected a number', code='invalid')
        return super().to_python(value)


class StrictIntegerField(forms.IntegerField):
    def to_python(self, value):
        if isinstance(value, (bool, str)) or (isinstance(value, float) and not value.is_integer()):
            raise forms.ValidationError('expected an integer', code='invalid')
        return super().to_python(value)


class SweepForm(forms.Form):
    parameter = forms.ChoiceField(choices=[(p, p) for p in SWEEP_PARAMETERS])
    min = StrictFloatField()
    max = StrictFloatField()
    count = StrictIntegerField(min_value=2)
    spacing = forms.ChoiceField(choices=[('log', 'log'), ('linear', 'linear')], required=False)

    def clean(self):
        cleaned = super().clean()
        low, high = cleaned.get('min'), cleaned.get('max')
        if low is not None and high is not None:
            if not low < high:
                self.add_error('max', 'sweep max must exceed min')
            if (cleaned.get('spacing') or 'log') == 'log' and low <= 0:
                self.add_error('min', 'log spacing needs a positive min')
        return cleaned


class ReferenceForm(forms.Form):
    kappa = StrictFloatField(required=False)
    nu = StrictFloatField(required=False)
    gamma0 = StrictFloatField(required=False)
    gammas = StrictFloatField(required=False)
    i_sat = StrictFloatField(required=False)


class ExperimentForm(forms.Form):
    name = forms.SlugField(required=False)
    model = forms.ChoiceField(choices=[(m, m) for m in MODELS])
    n_cells = StrictIntegerField(min_value=1)
    kappa = StrictFloatField()
    nu = StrictFloatField()
    gamma0 = StrictFloatField()
    gammas = StrictFloatField()
    i_sat = StrictFloatField(required=False)
    i_in = StrictFloatField(min_value=0)
    t_final = StrictFloatField(required=False)
    dt = StrictFloatField(required=False)
    stride = StrictIntegerField(required=False, min_value=1)
    window = NumberListField(required=False, length=2)
    t_transient = StrictFloatField(required=False, min_value=0)
    gamma_crit = StrictFloatField(required=False)
    profile = NumberListField(required=False)
    outputs = forms.JSONField(required=False)
    store_amplitudes = forms.BooleanField(required=False)

    def clean_outputs(self):
        outputs = self.cleaned_data.get('outputs')
        if outputs is None:
            return ('trajectory', 'averages')
        if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
            raise forms.ValidationError('expected a list of output names')
        unknown = sorted(set(outputs) - set(OUTPUTS))
        if unknown:
            raise forms.ValidationError(f'unknown outputs {unknown}; choose from {list(OUTPUTS)}')
        return tuple(dict.fromkeys(outputs))

    def clean(self):
        cleaned = super().clean()
        defaults = settings.BREATHER_LAB
        t_final = cleaned.get('t_final') or 100.0
        window = tuple(defaults['AVERAGING_WINDOW'])
        # short runs average over, and take periods from, their second half
        if window[1] > t_final:
            window = (t_final / 2, t_final)
        for key, value in (
            ('window', window),
            ('t_transient', min(defaults['T_TRANSIENT'], t_final / 2)),
        ):
            if cleaned.get(key) is None and key not in self.errors:
                cleaned[key] = value
        for key, value in (
            ('i_sat', 1.0),
            ('t_final', 100.0),
            ('dt', defaults['DEFAULT_DT']),
            ('name', 'experiment'),
        ):
            if cleaned.get(key) in (None, '') and key not in self.errors:
                cleaned[key] = value
        if self.errors:
            return cleaned

        dt, t_final = cleaned['dt'], cleaned['t_final']
        if not dt > 0:
            self.add_error('dt', 'dt must be positive')
        elif not t_final >= dt:
            self.add_error('t_final', 't_final must be at least dt')
        start, end = cleaned['window']
        if not 0 <= start < end:
            self.add_error('window', 'window must satisfy 0 <= start < end')
        elif end > t_final:
            self.add_error('window', f'window end {end} exceeds t_final {t_final}')

        try:
            cleaned['params'] = LatticeParams(**{key: cleaned[key] for key in PARAM_FIELDS})
        except DomainError as exc:
            self.add_error(_blame(str(exc), cleaned), str(exc))
        return cleaned


def _blame(message: str, cleaned: dict) -> str | None:
    """Pick the key a LatticeParams complaint is about."""
    if message.startswith('require'):
        if not 0 <= cleaned['gamma0'] <= cleaned['gammas']:
            return 'gamma0'
        return 'gammas'
    key = message.split(' ', 1)[0]
    return key if key in PARAM_FIELDS else None


def _collect(form: forms.Form, prefix: str = '') -> dict:
    return {
        (f'{prefix}{key}' if key != '__all__' else prefix.rstrip('.') or 'document'): [
            str(message) for message in messages
        ]
        for key, messages in form.errors.items()
    }


def _check_keys(data, allowed, prefix=''):
    unknown = sorted(set(data) - set(allowed))
    return {f'{prefix}{key}': ['unknown key'] for key in unknown}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError({'document': ['expected a JSON object']})
    errors = _check_keys(data, set(ExperimentForm.base_fields) | {'sweep', 'reference'})

    form = ExperimentForm(data={k: v for k, v in data.items() if k in ExperimentForm.base_fields})
    form.is_valid()
    errors.update(_collect(form))

    sweep = None
    if data.get('sweep') is not None:
        raw = data['sweep']
        if not isinstance(raw, dict):
            errors['sweep'] = ['expected an object']
        else:
            errors.update(_check_keys(raw, SweepForm.base_fields, 'sweep.'))
            sweep_form = SweepForm(data=raw)
            if sweep_form.is_valid():
                values = sweep_form.cleaned_data
                sweep = SweepAxis(
                    values['parameter'], values['min'], values['max'], values['count'],
                    values['spacing'] or 'log',
                )
            errors.update(_collect(sweep_form, 'sweep.'))

    reference = ()
    if data.get('reference') is not None:
        raw = data['reference']
        if not isinstance(raw, dict):
            errors['reference'] = ['expected an object']
        else:
            errors.update(_check_keys(raw, ReferenceForm.base_fields, 'reference.'))
            reference_form = ReferenceForm(data=raw)
            if reference_form.is_valid():
                reference = tuple(
                    sorted((k, v) for k, v in reference_form.cleaned_data.items() if v is not None)
                )
            errors.update(_collect(reference_form, 'reference.'))

    if errors:
        logger.error(f"Rejected experiment document: {errors}")
        raise ConfigError(errors)

    cleaned = form.cleaned_data
    params = cleaned['params']
    if reference:
        try:
            params.with_changes(**dict(reference))
        except DomainError as exc:
            raise ConfigError({'reference': [str(exc)]}) from exc
    if sweep is not None and sweep.parameter == 'i_in' and sweep.min < 0:
        raise ConfigError({'sweep.min': ['input intensity must be non-negative']})
    if sweep is not None and sweep.parameter != 'i_in':
        for value in (sweep.min, sweep.max):
            try:
                params.with_changes(**{sweep.parameter: value})
            except DomainError as exc:
                raise ConfigError({f'sweep.{sweep.parameter}': [str(exc)]}) from exc
    profile = cleaned.get('profile')
    if profile is not None and len(profile) != params.n_cells:
        raise ConfigError({'profile': [f'expected {params.n_cells} entries, got {len(profile)}']})

    stride = cleaned.get('stride') or default_stride(
        cleaned['t_final'], cleaned['dt'], settings.BREATHER_LAB['TARGET_SAMPLES']
    )
    gamma_crit = cleaned.get('gamma_crit')
    if gamma_crit is None:
        gamma_crit = default_gamma_crit(cleaned['model'], params)

    return ExperimentConfig(
        name=cleaned['name'],
        model=cleaned['model'],
        params=params,
        i_in=cleaned['i_in'],
        t_final=cleaned['t_final'],
        dt=cleaned['dt'],
        stride=stride,
        window=tuple(cleaned['window']),
        t_transient=cleaned['t_transient'],
        gamma_crit=gamma_crit,
        outputs=cleaned['outputs'],
        sweep=sweep,
        profile=profile,
        reference=reference,
        store_amplitudes=bool(cleaned.get('store_amplitudes')),
    )


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse a UTF-8 JSON experiment document; ``overrides`` replace top-level keys."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError({'document': [f'malformed JSON: {exc}']}) from exc
    if isinstance(data, dict) and overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    config = config_from_dict(data)
    logger.debug(f"Parsed experiment '{config.name}' ({config.model}, N={config.params.n_cells})")
    return config


def config_to_dict(config: ExperimentConfig) -> dict:
    data = {
        'name': config.name,
        'model': config.model,
        **asdict(config.params),
        'i_in': config.i_in,
        't_final': config.t_final,
        'dt': config.dt,
        'stride': config.stride,
        'window': list(config.window),
        't_transient': config.t_transient,
        'gamma_crit': config.gamma_crit,
        'outputs': list(config.outputs),
        'store_amplitudes': config.store_amplitudes,
    }
    if config.sweep is not None:
        data['sweep'] = asdict(config.sweep)
    if config.profile is not None:
        data['profile'] = list(config.profile)
    if config.reference:
        data['reference'] = dict(config.reference)
    return data


def serialize_config(config: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2)
