"""Trainers for DAEs (SGD with layer-wise pretraining) and Boltzmann machines
(PCD for the GRBM, greedy pretraining plus variational finetuning for GDBMs)."""

from .config import TrainConfig, corrupt_input, lr_schedule, stream_rng
from .dae import DaeGradients, dae_loss_and_grad, train_dae
from .gdbm import finetune_gdbm, pretrain_gdbm
from .grbm import PcdState, grbm_pcd_step, init_pcd_state, train_grbm

__all__ = [
    "DaeGradients",
    "PcdState",
    "TrainConfig",
    "corrupt_input",
    "dae_loss_and_grad",
    "finetune_gdbm",
    "grbm_pcd_step",
    "init_pcd_state",
    "lr_schedule",
    "pretrain_gdbm",
    "stream_rng",
    "train_dae",
    "train_grbm",
]
