"""Single-hidden-layer network representation, evaluation and persistence.

Model files are UTF-8 JSON documents::

    {
      "format": "rscn-model",
      "version": 1,
      "d": <input dim>, "m": <output dim>, "L": <hidden nodes>,
      "activation": "sigmoid",
      "nodes": [{"w": [...d floats], "b": float}, ...],    # length L
      "beta": [[...m floats], ...],                         # L rows
      "normalization": null | {"input_ranges": [[lo, hi], ...],   # d pairs
                               "output_ranges": [[lo, hi], ...]}  # m pairs
    }

Floats are written with ``repr`` precision so a save/load round trip is exact.
"""

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolation, DeserializationError, EmptyModel

FORMAT_NAME = "rscn-model"
FORMAT_VERSION = 1


class ActivationKind(enum.Enum):
    SIGMOID = "sigmoid"


def activate(kind, z, out=None):
    """Apply the activation elementwise. Works on scalars and arrays.

    ``out`` may alias ``z`` for an in-place update.
    """
    if kind is not ActivationKind.SIGMOID:
        raise ContractViolation(f"unsupported activation {kind!r}")
    # tanh form never overflows; exp(-z) would for z < -709
    if np.ndim(z) == 0:
        return 0.5 + 0.5 * float(np.tanh(0.5 * float(z)))
    out = np.multiply(z, 0.5, out=out)
    np.tanh(out, out=out)
    out *= 0.5
    out += 0.5
    return out


@dataclass(frozen=True)
class HiddenNode:
    w: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).ravel())
        object.__setattr__(self, "b", float(self.b))


def node_output(node, x_batch, activation=ActivationKind.SIGMOID):
    """Outputs ``g(w^T x_i + b)`` of one hidden node over a batch.

    Returns
    -------
    ndarray of shape (N,)
    """
    x = np.asarray(x_batch, dtype=float)
    if x.ndim == 1 and node.w.size == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[1] != node.w.size:
        raise ContractViolation(
            f"input dimension {x.shape[-1] if x.ndim else 0} does not match node dimension {node.w.size}"
        )
    return activate(activation, x @ node.w + node.b)


def hidden_matrix(weights, biases, x, activation=ActivationKind.SIGMOID):
    """Hidden-layer output matrix ``H`` of shape (N, L)."""
    return activate(activation, x @ weights.T + biases)


@dataclass(frozen=True)
class Normalization:
    """Per-column (min, max) ranges used to map raw data onto [0, 1]."""

    input_ranges: np.ndarray
    output_ranges: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "input_ranges", np.asarray(self.input_ranges, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "output_ranges", np.asarray(self.output_ranges, dtype=float).reshape(-1, 2))

    @staticmethod
    def _scale(ranges, values):
        lo, hi = ranges[:, 0], ranges[:, 1]
        span = hi - lo
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (values - lo) / safe, 0.5)

    @staticmethod
    def _unscale(ranges, values):
        lo, hi = ranges[:, 0], ranges[:, 1]
        return np.where(hi > lo, lo + values * (hi - lo), lo)

    def normalize_inputs(self, x):
        return self._scale(self.input_ranges, x)

    def denormalize_outputs(self, y):
        return self._unscale(self.output_ranges, y)


@dataclass(frozen=True)
class ScnModel:
    """Trained network ``f(x) = sum_j beta_j g(w_j^T x + b_j)``.

    Hidden parameters are kept as stacked arrays (``weights`` is L x d,
    ``biases`` has length L); :attr:`nodes` exposes them one node at a time.
    """

    weights: np.ndarray
    biases: np.ndarray
    beta: np.ndarray
    input_dim: int
    output_dim: int
    activation: ActivationKind = ActivationKind.SIGMOID
    normalization: Normalization | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1, self.input_dim)
        b = np.asarray(self.biases, dtype=float).ravel()
        beta = np.asarray(self.beta, dtype=float).reshape(-1, self.output_dim)
        if not (w.shape[0] == b.shape[0] == beta.shape[0]):
            raise ContractViolation(
                f"inconsistent node counts: weights {w.shape[0]}, biases {b.shape[0]}, beta rows {beta.shape[0]}"
            )
        for name, arr in (("weights", w), ("biases", b), ("beta", beta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_nodes(cls, nodes, beta, input_dim, output_dim, **kwargs):
        nodes = list(nodes)
        w = np.array([n.w for n in nodes]).reshape(len(nodes), input_dim)
        b = np.array([n.b for n in nodes])
        return cls(w, b, beta, input_dim, output_dim, **kwargs)

    @property
    def n_nodes(self):
        return self.biases.shape[0]

    @property
    def nodes(self):
        return tuple(HiddenNode(w, b) for w, b in zip(self.weights, self.biases))

    def with_beta(self, beta):
        return ScnModel(self.weights, self.biases, beta, self.input_dim, self.output_dim,
                        self.activation, self.normalization, dict(self.meta))

    def truncated(self, n_nodes, beta):
        return ScnModel(self.weights[:n_nodes], self.biases[:n_nodes], beta, self.input_dim,
                        self.output_dim, self.activation, self.normalization, dict(self.meta))

    def __eq__(self, other):
        if not isinstance(other, ScnModel):
            return NotImplemented
        same_norm = (self.normalization is None) == (other.normalization is None)
        if same_norm and self.normalization is not None:
            same_norm = (np.array_equal(self.normalization.input_ranges, other.normalization.input_ranges)
                         and np.array_equal(self.normalization.output_ranges, other.normalization.output_ranges))
        return (self.input_dim == other.input_dim and self.output_dim == other.output_dim
                and self.activation is other.activation and same_norm
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.biases, other.biases)
                and np.array_equal(self.beta, other.beta))

    __hash__ = None


def forward(model, x_batch, raw=False):
    """Network output ``H_L @ beta``.

    Parameters
    ----------
    model : ScnModel
    x_batch : array-like of shape (N, d)
    raw : bool, default=False
        When True and the model carries normalization metadata, inputs are
        mapped to [0, 1] first and outputs mapped back to the raw scale.

    Returns
    -------
    ndarray of shape (N, m)
    """
    if model.n_nodes == 0:
        raise EmptyModel("model has no hidden nodes")
    x = np.asarray(x_batch, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, model.input_dim)
    if x.shape[1] != model.input_dim:
        raise ContractViolation(f"expected {model.input_dim} input columns, got {x.shape[1]}")
    use_norm = raw and model.normalization is not None
    if use_norm:
        x = model.normalization.normalize_inputs(x)
    out = hidden_matrix(model.weights, model.biases, x, model.activation) @ model.beta
    if use_norm:
        out = model.normalization.denormalize_outputs(out)
    return out


def model_to_dict(model):
    norm = None
    if model.normalization is not None:
        norm = {"input_ranges": model.normalization.input_ranges.tolist(),
                "output_ranges": model.normalization.output_ranges.tolist()}
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "d": model.input_dim,
        "m": model.output_dim,
        "L": model.n_nodes,
        "activation": model.activation.value,
        "nodes": [{"w": w.tolist(), "b": float(b)} for w, b in zip(model.weights, model.biases)],
        "beta": model.beta.tolist(),
        "normalization": norm,
    }


def model_from_dict(doc):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise DeserializationError("not an rscn model document")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise DeserializationError(
            f"unsupported model format version {version!r}; this build reads version {FORMAT_VERSION}"
        )
    try:
        d, m, n = int(doc["d"]), int(doc["m"]), int(doc["L"])
        activation = ActivationKind(doc["activation"])
        nodes = doc["nodes"]
        if len(nodes) != n:
            raise DeserializationError(f"header says L={n} but {len(nodes)} nodes stored")
        w = np.array([node["w"] for node in nodes], dtype=float).reshape(n, d)
        b = np.array([node["b"] for node in nodes], dtype=float)
        beta = np.array(doc["beta"], dtype=float).reshape(n, m)
        norm = doc.get("normalization")
        if norm is not None:
            norm = Normalization(norm["input_ranges"], norm["output_ranges"])
    except DeserializationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DeserializationError(f"malformed model document: {exc}") from exc
    return ScnModel(w, b, beta, d, m, activation, norm)


def save_model(model, sink):
    """Write ``model`` to a path or a writable text/binary file object."""
    text = json.dumps(model_to_dict(model), indent=1)
    if hasattr(sink, "write"):
        try:
            sink.write(text)
        except TypeError:
            sink.write(text.encode("utf-8"))
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_model(source):
    """Read a model written by :func:`save_model` from a path or file object."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DeserializationError("model file is not UTF-8", exc.start) from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        offset = len(data[: exc.pos].encode("utf-8"))
        raise DeserializationError(f"truncated or corrupt model file: {exc.msg}", offset) from exc
    return model_from_dict(doc)
