"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import unittest

import torch
from torch import nn

from common.errors import DomainError, ShapeError
from network.vrnet import ArchitectureConfig, VrNet
from training.pruning import PruneMask, apply_prune, count_params, prunable_parameters, prune_threshold


class Wide(nn.Module):
    def __init__(self) -> None:
        super().__init__()

        self.conv = nn.Conv1d(100, 100, 1)


class TestPruneThreshold(unittest.TestCase):
    def test_pruned_fraction_tracks_rate(self) -> None:
        for rho in [0.3, 0.5, 0.8]:
            torch.manual_seed(0)
            model = Wide()
            mask = apply_prune(model, prune_threshold(model, rho))

            pruned = float((model.conv.weight == 0).float().mean())
            self.assertAlmostEqual(pruned, rho, delta=0.01)
            self.assertAlmostEqual(mask.sparsity, rho, delta=0.01)

    def test_biases_are_exempt(self) -> None:
        torch.manual_seed(1)
        model = Wide()
        bias = model.conv.bias.detach().clone()

        apply_prune(model, prune_threshold(model, 0.9))

        self.assertTrue(torch.equal(model.conv.bias, bias))

    def test_rate_range(self) -> None:
        with self.assertRaises(DomainError):
            prune_threshold(Wide(), 1.0)

    def test_no_prunable_weights(self) -> None:
        with self.assertRaises(DomainError):
            prune_threshold(nn.Linear(2, 2), 0.5)

    def test_quantile_interpolates(self) -> None:
        model = nn.Conv1d(1, 1, 4)
        with torch.no_grad():
            model.weight.copy_(torch.tensor([[[1.0, -2.0, 3.0, -4.0]]]))

        self.assertAlmostEqual(prune_threshold(model, 0.5), 2.5)

    def test_zero_threshold_keeps_everything(self) -> None:
        torch.manual_seed(4)
        model = Wide()
        weight = model.conv.weight.detach().clone()

        mask = apply_prune(model, 0.0)

        self.assertTrue(torch.equal(model.conv.weight, weight))
        self.assertEqual(mask.kept, mask.total)

    def test_infinite_threshold_zeroes_prunable_weights(self) -> None:
        torch.manual_seed(5)
        model = Wide()
        bias = model.conv.bias.detach().clone()

        mask = apply_prune(model, float("inf"))

        self.assertTrue(torch.all(model.conv.weight == 0))
        self.assertTrue(torch.equal(model.conv.bias, bias))
        self.assertEqual(mask.kept, 0)

    def test_threshold_ignores_which_layer_holds_a_weight(self) -> None:
        torch.manual_seed(6)
        model = VrNet(ArchitectureConfig(layers=3, channels=4))
        first = model.layers[0].prox.conv1.weight
        last = model.layers[2].prox.conv1.weight

        with torch.no_grad():
            first[0, 0, 0] = 100.0
            before = prune_threshold(model, 0.5)

            # same magnitudes, the large one now sits in another layer
            first[0, 0, 0], last[0, 0, 0] = float(last[0, 0, 0]), 100.0
            after = prune_threshold(model, 0.5)

        self.assertEqual(before, after)


class TestMaskedTraining(unittest.TestCase):
    def test_masked_weights_stay_zero(self) -> None:
        torch.manual_seed(2)
        model = Wide()
        mask = apply_prune(model, prune_threshold(model, 0.5))
        optimizer = torch.optim.Adam(model.parameters(), lr=1e-2)
        x = torch.randn(8, 100, 3)

        for _ in range(100):
            optimizer.zero_grad()
            model.conv(x).pow(2).mean().backward()
            mask.mask_gradients(model)
            optimizer.step()
            mask.apply(model)

        pruned = ~mask.masks["conv.weight"]
        self.assertTrue(torch.all(model.conv.weight[pruned] == 0))

    def test_mask_must_match_model(self) -> None:
        mask = PruneMask.keep_all(Wide())

        with self.assertRaises(ShapeError):
            mask.apply(VrNet(ArchitectureConfig(layers=1, channels=4)))


class TestCensus(unittest.TestCase):
    def test_vrnet_groups(self) -> None:
        model = VrNet(ArchitectureConfig(layers=2, channels=4))
        census = count_params(model)
        groups = {row.module: row for row in census.rows}

        self.assertEqual(set(groups), {"dun", "gcn", "threshold", "gate", "prox"})
        self.assertEqual(census.total, sum(p.numel() for p in model.parameters()))
        self.assertEqual(groups["dun"].total, 4)
        self.assertEqual(groups["threshold"].prunable, 0)

    def test_prunable_weights(self) -> None:
        model = VrNet(ArchitectureConfig(layers=1, gcn_layers=2, channels=4))
        names = list(prunable_parameters(model))

        self.assertIn("layers.0.graph.weights.propagation.0", names)
        self.assertIn("layers.0.prox.conv1.weight", names)
        self.assertTrue(all(not name.endswith(("bias", "readout", "zeta", "gamma")) for name in names))

    def test_shared_weights_counted_once(self) -> None:
        shared = VrNet(ArchitectureConfig(layers=3, channels=4, share_gcn=True, share_threshold=True))
        separate = VrNet(ArchitectureConfig(layers=3, channels=4))

        shared_rows = {row.module: row for row in count_params(shared).rows}
        separate_rows = {row.module: row for row in count_params(separate).rows}
        self.assertEqual(3 * shared_rows["gcn"].total, separate_rows["gcn"].total)
        self.assertEqual(3 * shared_rows["threshold"].total, separate_rows["threshold"].total)

    def test_nonzero_after_pruning(self) -> None:
        torch.manual_seed(3)
        model = VrNet(ArchitectureConfig(layers=2, channels=8))
        before = count_params(model)
        mask = apply_prune(model, prune_threshold(model, 0.8))
        after = count_params(model, mask)

        self.assertEqual(before.total, after.total)
        self.assertEqual(before.nonzero - after.nonzero, mask.total - mask.kept)
        self.assertIn("total", str(after))
