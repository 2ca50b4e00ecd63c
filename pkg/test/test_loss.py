"""
 This file is part of the vrnet project. For the full copyright and license
 information, see the LICENSE file that was distributed with this source code.
"""
import math
import unittest

import torch
from torch.nn import functional as F

from common.errors import DomainError
from training.loss import joint_loss, nmse_loss


class TestLoss(unittest.TestCase):
    def setUp(self) -> None:
        torch.manual_seed(0)
        self.h = torch.randn(4, 8, dtype=torch.complex64)
        self.h_hat = self.h + 0.1 * torch.randn(4, 8, dtype=torch.complex64)
        self.u_true = (torch.rand(4, 8) > 0.5).float()
        self.logits = torch.randn(4, 8)

    def test_nmse_identities(self) -> None:
        self.assertEqual(float(nmse_loss(self.h, self.h)), 0.0)
        self.assertAlmostEqual(float(nmse_loss(torch.zeros_like(self.h), self.h)), 1.0, places=6)
        self.assertAlmostEqual(float(nmse_loss(2 * self.h, self.h)), 1.0, places=6)

    def test_nmse_zero_channel(self) -> None:
        with self.assertRaises(DomainError):
            nmse_loss(self.h, torch.zeros_like(self.h))

    def test_channel_only_without_vr_weight(self) -> None:
        loss, metrics = joint_loss(self.h_hat, self.h, torch.sigmoid(self.logits), self.u_true, 0.0, self.logits)

        torch.testing.assert_close(loss, nmse_loss(self.h_hat, self.h))
        self.assertGreater(metrics.bce, 0.0)

    def test_weighted_sum(self) -> None:
        loss, _ = joint_loss(self.h_hat, self.h, torch.sigmoid(self.logits), self.u_true, 0.3, self.logits)
        expected = 0.7 * nmse_loss(self.h_hat, self.h) + 0.3 * F.binary_cross_entropy_with_logits(
            self.logits, self.u_true
        )

        torch.testing.assert_close(loss, expected)

    def test_sdr_reported_with_hard_decisions(self) -> None:
        u_soft = torch.tensor([[0.9, 0.2, 0.4, 0.1]])
        u_true = torch.tensor([[1.0, 0.0, 1.0, 0.0]])

        _, metrics = joint_loss(self.h_hat[:1, :4], self.h[:1, :4], u_soft, u_true, 0.5)

        self.assertAlmostEqual(metrics.sdr, 0.75)

    def test_missing_mask(self) -> None:
        loss, metrics = joint_loss(self.h_hat, self.h, None, self.u_true, 0.5)

        torch.testing.assert_close(loss, 0.5 * nmse_loss(self.h_hat, self.h))
        self.assertTrue(math.isnan(metrics.sdr))

    def test_gradient_reaches_logits(self) -> None:
        logits = self.logits.clone().requires_grad_(True)
        loss, _ = joint_loss(self.h_hat, self.h, torch.sigmoid(logits), self.u_true, 0.5, logits)
        loss.backward()

        self.assertGreater(float(logits.grad.abs().sum()), 0.0)

    def test_weight_range(self) -> None:
        with self.assertRaises(DomainError):
            joint_loss(self.h_hat, self.h, None, self.u_true, 1.5)
