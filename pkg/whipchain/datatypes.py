import json
import logging
from typing import Any, Dict

import numpy as np


class WhipChainError(Exception):
    """ Base class of every error raised by the library """


class ValidationError(WhipChainError):
    """ Malformed input: wrong lengths, non-finite values, bad config fields """


class LengthMismatchError(ValidationError):
    pass


class DegeneratePlaneError(ValidationError):
    pass


class NumericalFailure(WhipChainError):
    """ A solver or integrator could not produce a trustworthy result """


class SingularPivotError(NumericalFailure):
    pass


class NonFiniteStateError(NumericalFailure):
    pass


class CFLViolationError(NumericalFailure):
    pass


class AcceptanceFailure(WhipChainError):
    """ A study finished but missed its acceptance threshold """


def as_readonly_array(values, name: str, ndim: int = 1) -> np.ndarray:
    """ Copy `values` into a read-only float array, checking rank and finiteness """
    result = np.array(values, dtype=float)
    if result.ndim != ndim:
        raise ValidationError(f"'{name}' must be {ndim}-dimensional, got shape {result.shape}")
    if not np.all(np.isfinite(result)):
        raise ValidationError(f"'{name}' contains non-finite entries")
    result.flags.writeable = False
    return result


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return value


class Serializable:
    """
    Mixin for the value classes: JSON round trip through plain dicts.
    Subclasses implement `from_dict`; `to_dict` exports every public attribute.
    """

    def to_dict(self) -> Dict[str, Any]:
        return {
            k: _jsonable(v) for k, v in
            vars(self).copy().items()
            if not k.startswith("_")
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]):
        raise NotImplementedError

    @classmethod
    def from_file(cls, file_path: str):
        """ Create a new object from a JSON file """
        logging.getLogger(cls.__name__).debug(f"Loading {cls.__name__} from {file_path}")
        try:
            with open(file_path, "r") as infile:
                data = json.loads(infile.read())
        except OSError as e:
            raise ValidationError(f"Cannot read {file_path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ValidationError(f"{file_path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ValidationError(f"{file_path} must contain a JSON object")
        return cls.from_dict(data)

    def save(self, file_path: str):
        with open(file_path, "w") as outfile:
            outfile.write(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def require_fields(data: Dict[str, Any], owner: str, *fields: str):
    for field in fields:
        if field not in data:
            raise ValidationError(f"Missing '{field}' while reading {owner}")
