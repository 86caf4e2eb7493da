import torch

from mpnn_heuristic.model import HeuristicNet, ModelConfig, MsgPassLayer, masked_bce


def zero_weights(module):
    with torch.no_grad():
        for p in module.parameters():
            p.zero_()


def tiny_graph():
    # 3 nodes, edges 0->1 and 2->1; node 0 and 2 have no in-edges
    h = torch.tensor([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    edge_index = torch.tensor([[0, 2], [1, 1]])
    edge_attr = torch.tensor([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return h, edge_index, edge_attr


class TestMsgPassLayer:
    def test_zero_mlp_gives_zero_features(self):
        layer = MsgPassLayer(2, 4, 3, 8)
        zero_weights(layer.mlp)
        h, ei, ea = tiny_graph()
        assert torch.equal(layer(h, ei, ea), torch.zeros(3, 4))

    def test_isolated_node_gets_zero_vector(self):
        layer = MsgPassLayer(2, 4, 3, 8)
        h, ei, ea = tiny_graph()
        out = layer(h, ei, ea)
        assert torch.equal(out[0], torch.zeros(4))  # no in-edges
        assert torch.equal(out[2], torch.zeros(4))

    def test_matches_hand_computation_with_fixed_mlp(self):
        # 2 nodes, one edge 0 -> 1, 1x1 weight matrix fixed by hand
        layer = MsgPassLayer(1, 1, 1, 1)
        with torch.no_grad():
            # mlp: Linear(1,1) ReLU Linear(1,1): edge feat 2.0 -> relu(2*1+0)=2 -> 2*3+1=7
            layer.mlp[0].weight.fill_(1.0)
            layer.mlp[0].bias.fill_(0.0)
            layer.mlp[2].weight.fill_(3.0)
            layer.mlp[2].bias.fill_(1.0)
        h = torch.tensor([[5.0], [9.0]])
        edge_index = torch.tensor([[0], [1]])
        edge_attr = torch.tensor([[2.0]])
        out = layer(h, edge_index, edge_attr)
        # message into node 1: weight 7 times h[0]=5 -> 35; node 0 isolated
        assert torch.equal(out, torch.tensor([[0.0], [35.0]]))

    def test_dimension_mismatch_rejected(self):
        layer = MsgPassLayer(2, 4, 3, 8)
        bad = torch.zeros(3, 5)
        h, ei, ea = tiny_graph()
        try:
            layer(bad, ei, ea)
            assert False, "expected ValueError"
        except ValueError:
            pass


class TestNetwork:
    def config(self, **kw):
        base = dict(layers=3, node_features=8, mlp_hidden=16, in_features=4,
                    edge_features=5, batch_norm=False, dropout_keep=1.0)
        base.update(kw)
        return ModelConfig(**base)

    def random_graph(self, n=6, e=10, seed=0, edge_dim=5, in_dim=4):
        g = torch.Generator().manual_seed(seed)
        h = torch.rand((n, in_dim), generator=g)
        ei = torch.randint(0, n, (2, e), generator=g)
        ea = torch.rand((e, edge_dim), generator=g)
        return h, ei, ea

    def test_outputs_are_probabilities(self):
        net = HeuristicNet(self.config())
        net.eval()
        h, ei, ea = self.random_graph()
        probs = net(h, ei, ea)
        assert probs.shape == (6,)
        assert ((probs >= 0) & (probs <= 1)).all()

    def test_residual_layers_pass_input_through_when_zeroed(self):
        # zero every layer past the first: with residual wiring (and ReLU
        # being idempotent) the rectified layer-1 features must reach the
        # head unchanged
        deep = HeuristicNet(self.config(layers=4))
        for layer in deep.layers[1:]:
            zero_weights(layer.mlp)
        deep.eval()
        h, ei, ea = self.random_graph()
        with torch.no_grad():
            z = torch.relu(deep.layers[0](h, ei, ea))
            expected = torch.sigmoid(deep.head(z)).squeeze(-1)
            assert torch.allclose(deep(h, ei, ea), expected, atol=1e-6)

    def test_permutation_invariance_of_node_outputs(self):
        net = HeuristicNet(self.config())
        net.eval()
        h, ei, ea = self.random_graph(n=7, e=14, seed=3)
        probs = net(h, ei, ea)
        perm = torch.randperm(7, generator=torch.Generator().manual_seed(9))
        inv = torch.empty_like(perm)
        inv[perm] = torch.arange(7)
        probs_p = net(h[perm], inv[ei], ea)
        assert torch.allclose(probs_p, probs[perm], atol=1e-6)

    def test_gradient_check_against_central_differences(self):
        torch.manual_seed(1)
        config = self.config(layers=2, node_features=4, mlp_hidden=6)
        net = HeuristicNet(config).double()
        net.eval()
        g = torch.Generator().manual_seed(5)
        h = torch.rand((5, 4), generator=g, dtype=torch.double)
        ei = torch.randint(0, 5, (2, 8), generator=g)
        ea = torch.rand((8, 5), generator=g, dtype=torch.double)
        active = torch.tensor([0, 2, 4])
        labels = torch.tensor([1.0, 0.0, 1.0], dtype=torch.double)
        full = torch.zeros(5, dtype=torch.double)
        full[active] = labels

        def loss_value():
            return masked_bce(net(h, ei, ea), full, active)

        loss = loss_value()
        loss.backward()
        eps = 1e-6
        checked = 0
        for p in net.parameters():
            if p.grad is None:
                continue
            flat = p.detach().view(-1)
            gflat = p.grad.view(-1)
            for i in range(0, flat.numel(), max(1, flat.numel() // 3)):
                orig = flat[i].item()
                with torch.no_grad():
                    flat[i] = orig + eps
                    up = loss_value().item()
                    flat[i] = orig - eps
                    down = loss_value().item()
                    flat[i] = orig
                numeric = (up - down) / (2 * eps)
                analytic = gflat[i].item()
                denom = max(abs(numeric), abs(analytic), 1e-8)
                assert abs(numeric - analytic) / denom < 1e-4, (numeric, analytic)
                checked += 1
        assert checked >= 10


def test_masked_loss_ignores_inactive_labels():
    torch.manual_seed(0)
    probs = torch.rand(8)
    labels = torch.randint(0, 2, (8,)).float()
    active = torch.tensor([1, 4, 6])
    base = masked_bce(probs, labels, active)
    tampered = labels.clone()
    for i in range(8):
        if i not in (1, 4, 6):
            tampered[i] = 1 - tampered[i]
    assert torch.equal(masked_bce(probs, tampered, active), base)
