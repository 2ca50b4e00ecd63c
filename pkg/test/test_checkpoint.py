"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import os
import tempfile
import unittest

import torch

from common.errors import ManifestError
from network.vrnet import ArchitectureConfig, VrNet
from training.checkpoint import load_checkpoint, save_checkpoint
from training.pruning import apply_prune, count_params, prune_threshold


class TestCheckpoint(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "model.npz")
        torch.manual_seed(0)
        self.model = VrNet(ArchitectureConfig(layers=2, channels=4))

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_parameters_survive(self) -> None:
        save_checkpoint(self.path, self.model, {"seed": 5}, "cfg", "data", epoch=3)
        checkpoint = load_checkpoint(self.path)

        restored = VrNet(ArchitectureConfig(layers=2, channels=4))
        restored.load_state_dict(checkpoint.state)
        for (name, original), (_, loaded) in zip(self.model.state_dict().items(), restored.state_dict().items()):
            self.assertTrue(torch.equal(original, loaded), name)

        self.assertEqual(checkpoint.epoch, 3)
        self.assertEqual(checkpoint.config_hash, "cfg")
        self.assertEqual(checkpoint.manifest["master_seed"], 5)
        self.assertIsNone(checkpoint.mask)

    def test_mask_and_optimizer(self) -> None:
        mask = apply_prune(self.model, prune_threshold(self.model, 0.5))
        optimizer = torch.optim.Adam(self.model.parameters())
        save_checkpoint(self.path, self.model, {}, "cfg", "data", mask=mask, optimizer=optimizer)
        checkpoint = load_checkpoint(self.path)

        self.assertEqual(checkpoint.mask.masks.keys(), mask.masks.keys())
        for name, keep in mask.masks.items():
            self.assertTrue(torch.equal(checkpoint.mask.masks[name], keep))
        self.assertAlmostEqual(checkpoint.mask.threshold, mask.threshold)
        self.assertEqual(checkpoint.manifest["census"]["nonzero"], count_params(self.model, mask).nonzero)
        self.assertIn("param_groups", checkpoint.optimizer_state)

    def test_census_survives_a_round_trip(self) -> None:
        mask = apply_prune(self.model, prune_threshold(self.model, 0.6))
        save_checkpoint(self.path, self.model, {}, "cfg", "data", mask=mask)
        checkpoint = load_checkpoint(self.path)

        restored = VrNet(ArchitectureConfig(layers=2, channels=4))
        restored.load_state_dict(checkpoint.state)

        self.assertEqual(count_params(restored, checkpoint.mask).as_records(), count_params(self.model, mask).as_records())
        self.assertEqual(checkpoint.manifest["census"]["nonzero"], count_params(restored, checkpoint.mask).nonzero)

    def test_rewrite_replaces_file(self) -> None:
        save_checkpoint(self.path, self.model, {}, "first", "data")
        save_checkpoint(self.path, self.model, {}, "second", "data")

        self.assertEqual(load_checkpoint(self.path).config_hash, "second")
        self.assertEqual(os.listdir(self.tmp.name), ["model.npz"])

    def test_garbage_file(self) -> None:
        with open(self.path, "wb") as stream:
            stream.write(b"not a checkpoint")

        with self.assertRaises(ManifestError):
            load_checkpoint(self.path)

    def test_missing_file(self) -> None:
        with self.assertRaises(ManifestError):
            load_checkpoint(os.path.join(self.tmp.name, "missing.npz"))
