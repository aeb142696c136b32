"""
Trainer - Offline digital training of the reference CNN.

The network is trained in PyTorch with the same graph the runtime evaluates
(average pool with stride 1 and even-index downsampling included) and its
parameters are exported into a CnnModel. Requires the ``train`` extra.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..config import TrainConfig
from ..errors import ConfigurationError, ContractError
from .model import CnnModel, Dataset


logger = logging.getLogger(__name__)

try:
    import torch
    import torch.nn as nn
    import torch.nn.functional as F
except ImportError:  # pragma: no cover - exercised only without the extra
    torch = None  # type: ignore[assignment]


def _require_torch() -> None:
    if torch is None:
        raise ConfigurationError("training needs PyTorch; install the 'train' extra")


@dataclass
class TrainResult:
    """Outcome of a training run.

    Attributes:
        model: Exported parameters
        losses: Mini-batch cross-entropy losses in step order
        epoch_losses: Mean loss of each epoch
        holdout_accuracy: Digital accuracy on the held-out set, if one was given
    """
    model: CnnModel
    losses: List[float] = field(default_factory=list)
    epoch_losses: List[float] = field(default_factory=list)
    holdout_accuracy: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": len(self.losses),
            "epoch_losses": self.epoch_losses,
            "final_loss": self.losses[-1] if self.losses else None,
            "holdout_accuracy": self.holdout_accuracy,
        }


def _build_net() -> "nn.Module":
    class ReferenceNet(nn.Module):
        """conv(1->8, 5) relu conv(8->8, 5) relu avgpool(2, s1) [::2, ::2] fc 800->128 relu fc 128->10"""

        def __init__(self) -> None:
            super().__init__()
            self.conv1 = nn.Conv2d(1, 8, kernel_size=5)
            self.conv2 = nn.Conv2d(8, 8, kernel_size=5)
            self.fc1 = nn.Linear(800, 128)
            self.fc2 = nn.Linear(128, 10)

        def forward(self, x: "torch.Tensor") -> "torch.Tensor":
            x = F.relu(self.conv1(x))
            x = F.relu(self.conv2(x))
            x = F.avg_pool2d(x, kernel_size=2, stride=1)
            x = x[:, :, ::2, ::2]
            # N x C x H x W -> N x (H W C): row, column, channel
            x = x.permute(0, 2, 3, 1).reshape(x.shape[0], -1)
            x = F.relu(self.fc1(x))
            return self.fc2(x)

    return ReferenceNet()


def _export(net: "nn.Module") -> CnnModel:
    def arr(t: "torch.Tensor") -> np.ndarray:
        return t.detach().cpu().double().numpy()

    return CnnModel(
        # torch keeps K x D x R x R; the runtime wants R x R x D x K
        conv1=arr(net.conv1.weight.permute(2, 3, 1, 0)),
        conv1_bias=arr(net.conv1.bias),
        conv2=arr(net.conv2.weight.permute(2, 3, 1, 0)),
        conv2_bias=arr(net.conv2.bias),
        fc1=arr(net.fc1.weight),
        fc1_bias=arr(net.fc1.bias),
        fc2=arr(net.fc2.weight),
        fc2_bias=arr(net.fc2.bias),
    )


def _to_tensors(dataset: Dataset) -> tuple["torch.Tensor", "torch.Tensor"]:
    images = torch.from_numpy(np.ascontiguousarray(dataset.images, dtype=np.float32)).unsqueeze(1)
    labels = torch.from_numpy(dataset.labels.astype(np.int64))
    return images, labels


def train_reference(
    train_set: Dataset,
    config: Optional[TrainConfig] = None,
    holdout: Optional[Dataset] = None,
) -> TrainResult:
    """Train the reference CNN with ADAM and cross-entropy.

    Training runs on one CPU thread with deterministic kernels, so a fixed
    seed gives bit-identical weights.

    Args:
        train_set: Training images and labels
        config: Hyperparameters; ``train_size`` truncates the training set
        holdout: Optional held-out set scored digitally after training

    Raises:
        ContractError: If the training set is empty
        ConfigurationError: If PyTorch is not installed
    """
    _require_torch()
    config = config or TrainConfig()
    if config.train_size is not None:
        train_set = train_set.subset(config.train_size)
    if len(train_set) == 0:
        raise ContractError("training set is empty")

    torch.manual_seed(config.seed)
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)

    net = _build_net()
    optimizer = torch.optim.Adam(net.parameters(), lr=config.lr, betas=(config.beta1, config.beta2))
    images, labels = _to_tensors(train_set)
    generator = torch.Generator().manual_seed(config.seed)

    result_losses: List[float] = []
    epoch_losses: List[float] = []
    net.train()
    for epoch in range(config.epochs):
        order = torch.randperm(len(train_set), generator=generator)
        epoch_total = 0.0
        batches = 0
        for start in range(0, len(train_set), config.batch_size):
            idx = order[start:start + config.batch_size]
            optimizer.zero_grad()
            loss = F.cross_entropy(net(images[idx]), labels[idx])
            loss.backward()
            optimizer.step()
            value = float(loss.item())
            result_losses.append(value)
            epoch_total += value
            batches += 1
        epoch_losses.append(epoch_total / batches)
        logger.info(f"epoch {epoch + 1}/{config.epochs}: mean loss {epoch_losses[-1]:.4f}")

    model = _export(net)
    result = TrainResult(model=model, losses=result_losses, epoch_losses=epoch_losses)

    if holdout is not None and len(holdout) > 0:
        net.eval()
        h_images, h_labels = _to_tensors(holdout)
        with torch.no_grad():
            preds = net(h_images).argmax(dim=1)
        result.holdout_accuracy = float((preds == h_labels).double().mean().item())
        logger.info(f"held-out accuracy {result.holdout_accuracy:.4f} on {len(holdout)} images")

    return result
