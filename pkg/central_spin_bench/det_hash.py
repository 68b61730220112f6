"""
Deterministic fingerprints of models, initial states and scenario configs.

Adapted from tango's ``det_hash``: objects are pickled with ``dill`` and the blake2b digest
of the pickle is base58-encoded. Arrays are hashed through their dtype, shape and raw bytes
so that the fingerprint does not depend on pickle framing.
"""
import collections
import hashlib
import io
from abc import abstractmethod
from typing import Any, MutableMapping, Optional

import base58
import dill
import numpy as np


class CustomDetHash:
    """
    By default, :func:`det_hash()` pickles an object and hashes the pickle. Derive from this
    class and implement :meth:`det_hash_object()` to control what goes into the hash.
    Returning ``None`` falls back to pickling the object itself.
    """

    @abstractmethod
    def det_hash_object(self) -> Any:
        raise NotImplementedError()


class DetHashWithVersion(CustomDetHash):
    """
    Mixin that folds a static ``VERSION`` into the hash. Solvers use it so that a change in
    numerical method changes the fingerprint of everything it produced.
    """

    VERSION: Optional[str] = None

    def det_hash_object(self) -> Any:
        if self.VERSION is not None:
            return self.VERSION, self
        else:
            return None


_PICKLE_PROTOCOL = 4


class _DetHashPickler(dill.Pickler):
    def __init__(self, buffer: io.BytesIO):
        super().__init__(buffer, protocol=_PICKLE_PROTOCOL)
        # An object whose det_hash_object() contains itself is pickled normally the
        # second time round; DetHashWithVersion relies on that.
        self.recursively_pickled_ids: MutableMapping[int, int] = collections.Counter()

    def save(self, obj, save_persistent_id=True):
        self.recursively_pickled_ids[id(obj)] += 1
        super().save(obj, save_persistent_id)
        self.recursively_pickled_ids[id(obj)] -= 1

    def persistent_id(self, obj: Any) -> Any:
        if isinstance(obj, CustomDetHash) and self.recursively_pickled_ids[id(obj)] <= 1:
            det_hash_object = obj.det_hash_object()
            if det_hash_object is not None:
                return obj.__class__.__module__, obj.__class__.__qualname__, det_hash_object
            else:
                return None
        elif isinstance(obj, type):
            return obj.__module__, obj.__qualname__
        elif isinstance(obj, np.ndarray):
            contiguous = np.ascontiguousarray(obj)
            return str(contiguous.dtype), contiguous.shape, contiguous.tobytes()
        elif callable(obj):
            if hasattr(obj, "__module__") and hasattr(obj, "__qualname__"):
                return obj.__module__, obj.__qualname__
            else:
                return None
        else:
            return None


def det_hash(o: Any) -> str:
    """
    Returns a deterministic hash code of arbitrary Python objects.
    """
    m = hashlib.blake2b()
    with io.BytesIO() as buffer:
        pickler = _DetHashPickler(buffer)
        pickler.dump(o)
        m.update(buffer.getbuffer())
        return base58.b58encode(m.digest()).decode()
