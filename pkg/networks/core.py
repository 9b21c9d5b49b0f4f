"""
Network Core
Feed-forward networks in float64 on CPU, the squashed Gaussian policy head
with reparameterised sampling, exponential-moving-average target tracking,
recorded-pass gradients, central finite-difference verification and the flat
binary checkpoint container.
"""

import copy
import math
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from utils.errors import InputValidationError, NoRecordedPassError, ShapeMismatchError

DTYPE = torch.float64
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
ATANH_EDGE = 1.0 - 1e-12
_LOG_2PI = math.log(2.0 * math.pi)
_LOG_2 = math.log(2.0)


def as_tensor(values) -> torch.Tensor:
    if isinstance(values, torch.Tensor):
        return values.to(DTYPE)
    return torch.as_tensor(np.asarray(values, dtype=np.float64), dtype=DTYPE)


class Mlp(nn.Module):
    """
    Fully connected network with ReLU hidden layers.

    Weights and biases are drawn uniformly from ±1/sqrt(fan_in); the last
    layer is additionally multiplied by final_scale.
    """

    def __init__(
        self,
        layer_sizes: Sequence[int],
        output_activation: Literal["linear", "sigmoid"] = "linear",
        final_scale: float = 1.0,
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if len(layer_sizes) < 2 or any(int(n) < 1 for n in layer_sizes):
            raise InputValidationError(f"layer_sizes must list at least two positive sizes, got {list(layer_sizes)}")
        if output_activation not in ("linear", "sigmoid"):
            raise InputValidationError(f"unknown output activation {output_activation!r}")
        self.layer_sizes = [int(n) for n in layer_sizes]
        self.output_activation = output_activation
        self.layers = nn.ModuleList(
            nn.Linear(n_in, n_out, dtype=DTYPE) for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:])
        )
        self._record: Optional[Tuple[torch.Tensor, torch.Tensor]] = None
        self.reset_parameters(generator, final_scale)

    def reset_parameters(self, generator: Optional[torch.Generator] = None, final_scale: float = 1.0) -> None:
        with torch.no_grad():
            for index, layer in enumerate(self.layers):
                bound = 1.0 / math.sqrt(layer.in_features)
                if index == len(self.layers) - 1:
                    bound *= final_scale
                for param in (layer.weight, layer.bias):
                    noise = torch.rand(param.shape, generator=generator, dtype=DTYPE)
                    param.copy_((2.0 * noise - 1.0) * bound)

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def forward(self, inputs: torch.Tensor) -> torch.Tensor:
        if inputs.shape[-1] != self.input_size:
            raise ShapeMismatchError(f"input width {inputs.shape[-1]} does not match first layer {self.input_size}")
        hidden = inputs
        for layer in self.layers[:-1]:
            hidden = F.relu(layer(hidden))
        out = self.layers[-1](hidden)
        return torch.sigmoid(out) if self.output_activation == "sigmoid" else out

    def record(self, inputs) -> torch.Tensor:
        """Forward pass whose graph is kept for one later call to grad()."""
        leaf = as_tensor(inputs).detach().clone().requires_grad_(True)
        outputs = self.forward(leaf)
        self._record = (leaf, outputs)
        return outputs


def forward(net: Mlp, inputs) -> torch.Tensor:
    """Deterministic forward pass without gradient tracking."""
    with torch.no_grad():
        return net(as_tensor(inputs))


@dataclass
class GradientResult:
    """Reverse-mode gradients of a recorded pass."""
    parameters: "OrderedDict[str, torch.Tensor]"
    inputs: torch.Tensor


def grad(net: Mlp, loss_adjoint) -> GradientResult:
    """
    Reverse-mode gradients of Σ adjoint·output for the last recorded pass.

    Args:
        net: Network on which record() was called
        loss_adjoint: dL/d(output) with the output's shape

    Returns:
        Parameter gradients by name and the input gradient

    Raises:
        NoRecordedPassError: record() was not called since the last grad()
    """
    if net._record is None:
        raise NoRecordedPassError("grad() requires a forward pass recorded with record()")
    leaf, outputs = net._record
    net._record = None
    adjoint = as_tensor(loss_adjoint)
    if adjoint.shape != outputs.shape:
        raise ShapeMismatchError(f"adjoint shape {tuple(adjoint.shape)} does not match output {tuple(outputs.shape)}")
    names = [name for name, _ in net.named_parameters()]
    params = [param for _, param in net.named_parameters()]
    grads = torch.autograd.grad(outputs, params + [leaf], grad_outputs=adjoint, allow_unused=True)
    param_grads = OrderedDict(
        (name, torch.zeros_like(param) if g is None else g) for name, param, g in zip(names, params, grads[:-1])
    )
    input_grad = torch.zeros_like(leaf) if grads[-1] is None else grads[-1]
    return GradientResult(parameters=param_grads, inputs=input_grad)


@dataclass
class FiniteDifferenceReport:
    """Agreement between analytic gradients and central differences."""
    relative_errors: List[float]
    step: float

    @property
    def max_relative_error(self) -> float:
        return max(self.relative_errors) if self.relative_errors else 0.0


def relative_error(numeric: torch.Tensor, analytic: torch.Tensor, floor: float = 1e-10) -> float:
    scale = max(float(torch.linalg.norm(numeric)), float(torch.linalg.norm(analytic)), floor)
    return float(torch.linalg.norm(numeric - analytic)) / scale


def finite_difference_check(
    loss_fn: Callable[[], torch.Tensor],
    params: Sequence[torch.Tensor],
    analytic: Sequence[torch.Tensor],
    step: float = 1e-6,
) -> FiniteDifferenceReport:
    """
    Compare analytic gradients with central differences of loss_fn.

    Each entry of every parameter is perturbed in place by ±step; loss_fn must
    re-evaluate the loss with whatever common random numbers it closes over.
    Errors are norm-relative per parameter tensor.

    Args:
        loss_fn: Zero-argument callable returning a scalar loss
        params: Parameters to perturb
        analytic: Analytic gradients, one per parameter
        step: Perturbation size

    Returns:
        FiniteDifferenceReport
    """
    if len(params) != len(analytic):
        raise ShapeMismatchError("params and analytic gradients differ in length")
    errors = []
    with torch.no_grad():
        for param, expected in zip(params, analytic):
            numeric = torch.zeros_like(param)
            flat, flat_numeric = param.view(-1), numeric.view(-1)
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + step
                upper = float(loss_fn())
                flat[i] = original - step
                lower = float(loss_fn())
                flat[i] = original
                flat_numeric[i] = (upper - lower) / (2.0 * step)
            errors.append(relative_error(numeric, expected.detach()))
    return FiniteDifferenceReport(relative_errors=errors, step=step)


def squash_log_jacobian(pre_tanh: torch.Tensor) -> torch.Tensor:
    """log(1 − tanh(u)²) computed stably as 2(log 2 − u − softplus(−2u))."""
    return 2.0 * (_LOG_2 - pre_tanh - F.softplus(-2.0 * pre_tanh))


class GaussianPolicyHead(nn.Module):
    """
    Independent Gaussian policy over an MLP trunk, optionally squashed by tanh
    onto the box [−action_scale, action_scale]^d.
    """

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        hidden_sizes: Sequence[int] = (256, 256),
        squash: bool = True,
        action_scale: float = 1.0,
        generator: Optional[torch.Generator] = None,
        final_scale: float = 1e-2,
    ):
        super().__init__()
        if action_scale <= 0.0:
            raise InputValidationError(f"action_scale must be > 0, got {action_scale}")
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.squash = squash
        self.action_scale = float(action_scale)
        self.trunk = Mlp([state_dim, *hidden_sizes, 2 * action_dim], final_scale=final_scale, generator=generator)

    def distribution_params(self, state: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        out = self.trunk(state)
        mean, log_std = out[..., : self.action_dim], out[..., self.action_dim:]
        return mean, torch.clamp(log_std, LOG_STD_MIN, LOG_STD_MAX)

    def sample(
        self, state: torch.Tensor, noise: Optional[torch.Tensor] = None, generator: Optional[torch.Generator] = None
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        Reparameterised sample a = scale·tanh(mean + std·ε).

        Returns:
            (action, log_prob, noise); gradients flow through mean and std only
        """
        mean, log_std = self.distribution_params(state)
        if noise is None:
            noise = torch.randn(mean.shape, generator=generator, dtype=DTYPE)
        noise = noise.detach()
        pre_tanh = mean + torch.exp(log_std) * noise
        gaussian = (-0.5 * noise.pow(2) - log_std - 0.5 * _LOG_2PI).sum(dim=-1)
        if not self.squash:
            return pre_tanh, gaussian, noise
        action = self.action_scale * torch.tanh(pre_tanh)
        correction = (squash_log_jacobian(pre_tanh) + math.log(self.action_scale)).sum(dim=-1)
        return action, gaussian - correction, noise

    def log_prob_of(self, state: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        """Log density of given actions (for example actions drawn from the buffer)."""
        mean, log_std = self.distribution_params(state)
        if self.squash:
            unit = torch.clamp(action / self.action_scale, -ATANH_EDGE, ATANH_EDGE)
            pre_tanh = torch.atanh(unit)
        else:
            pre_tanh = action
        z = (pre_tanh - mean) * torch.exp(-log_std)
        gaussian = (-0.5 * z.pow(2) - log_std - 0.5 * _LOG_2PI).sum(dim=-1)
        if not self.squash:
            return gaussian
        return gaussian - (squash_log_jacobian(pre_tanh) + math.log(self.action_scale)).sum(dim=-1)

    def deterministic(self, state: torch.Tensor) -> torch.Tensor:
        """Mean action, squashed when the head squashes."""
        mean, _ = self.distribution_params(state)
        return self.action_scale * torch.tanh(mean) if self.squash else mean

    def forward(self, state: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        return self.distribution_params(state)


def sample_action(
    policy: GaussianPolicyHead, state, noise=None, generator: Optional[torch.Generator] = None
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Reparameterised action, its log density and the noise used."""
    return policy.sample(as_tensor(state), None if noise is None else as_tensor(noise), generator)


class EmaTracker:
    """Shadow copy of a module updated as shadow ← (1−τ)·shadow + τ·source."""

    def __init__(self, source: nn.Module, tau: float = 0.005):
        if not 0.0 <= tau <= 1.0:
            raise InputValidationError(f"tau must lie in [0, 1], got {tau}")
        self.tau = float(tau)
        self.shadow = copy.deepcopy(source)
        for param in self.shadow.parameters():
            param.requires_grad_(False)

    def update(self, source: nn.Module) -> nn.Module:
        shadow_params = list(self.shadow.parameters())
        source_params = list(source.parameters())
        if len(shadow_params) != len(source_params) or any(
            s.shape != p.shape for s, p in zip(shadow_params, source_params)
        ):
            raise ShapeMismatchError("EMA source parameters do not match the shadow shapes")
        with torch.no_grad():
            for shadow, param in zip(shadow_params, source_params):
                shadow.mul_(1.0 - self.tau).add_(param.detach(), alpha=self.tau)
        return self.shadow

    def __call__(self, inputs: torch.Tensor) -> torch.Tensor:
        return self.shadow(inputs)


def ema_update(tracker: EmaTracker, source: nn.Module) -> nn.Module:
    """Advance the tracker one step towards source and return the shadow module."""
    return tracker.update(source)


# Checkpoint container: <path>.bin holds little-endian float64 values back to
# back, <path>.manifest lists "name d1,d2,..." per array in the same order.

def _container_paths(path: Union[str, Path]) -> Tuple[Path, Path]:
    path = Path(path)
    return path.with_name(path.name + ".bin"), path.with_name(path.name + ".manifest")


def save_arrays(path: Union[str, Path], arrays: "OrderedDict[str, np.ndarray]") -> None:
    """Write named arrays to the flat binary container."""
    bin_path, manifest_path = _container_paths(path)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    with bin_path.open("wb") as fh:
        for name, value in arrays.items():
            if not name or any(ch.isspace() for ch in name):
                raise InputValidationError(f"array name {name!r} must be nonempty without whitespace")
            arr = np.asarray(value, dtype="<f8")
            fh.write(np.ascontiguousarray(arr).tobytes())
            lines.append(f"{name} {','.join(str(d) for d in arr.shape)}")
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_arrays(path: Union[str, Path]) -> "OrderedDict[str, np.ndarray]":
    """Read named arrays from the flat binary container."""
    bin_path, manifest_path = _container_paths(path)
    raw = np.frombuffer(bin_path.read_bytes(), dtype="<f8")
    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    offset = 0
    for line in manifest_path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        name, _, dims = line.partition(" ")
        shape = tuple(int(d) for d in dims.split(",") if d)
        count = int(np.prod(shape)) if shape else 1
        if offset + count > raw.size:
            raise ShapeMismatchError(f"checkpoint {bin_path} is shorter than its manifest")
        arrays[name] = raw[offset:offset + count].reshape(shape).astype(np.float64)
        offset += count
    if offset != raw.size:
        raise ShapeMismatchError(f"checkpoint {bin_path} has {raw.size - offset} unlisted values")
    return arrays


def module_arrays(modules: Dict[str, nn.Module]) -> "OrderedDict[str, np.ndarray]":
    """Flatten named modules into "<module>.<parameter>" arrays."""
    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for prefix, module in modules.items():
        for name, tensor in module.state_dict().items():
            arrays[f"{prefix}.{name}"] = tensor.detach().cpu().numpy().astype(np.float64)
    return arrays


def load_module_arrays(modules: Dict[str, nn.Module], arrays: Dict[str, np.ndarray]) -> None:
    """Copy arrays produced by module_arrays back into the modules."""
    for prefix, module in modules.items():
        state = module.state_dict()
        for name, tensor in state.items():
            key = f"{prefix}.{name}"
            if key not in arrays:
                raise ShapeMismatchError(f"checkpoint has no entry {key}")
            value = torch.as_tensor(arrays[key], dtype=tensor.dtype)
            if value.shape != tensor.shape:
                raise ShapeMismatchError(f"{key}: checkpoint shape {tuple(value.shape)} != {tuple(tensor.shape)}")
            state[name] = value
        module.load_state_dict(state)
