"""Train the constrained VGG-9 on MNIST (raw and edge inputs) and export fixtures.

Writes <out>/mnist_vgg9.snnc, <out>/edge_mnist_vgg9.snnc and two 1000-image
IDX subsets (calibration from the train split, test from the test split).
"""

import argparse
import json
import os
import time

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

import snnport

FILTERS = [6, 16, 32, 32, 48, 48]


class VGG9(nn.Module):
    def __init__(self, classes=10, dropout=0.25):
        super().__init__()
        chans = [1] + FILTERS
        self.convs = nn.ModuleList(nn.Conv2d(chans[i], chans[i + 1], 3, padding=1) for i in range(6))
        self.fc1 = nn.Linear(48, 120)
        self.fc2 = nn.Linear(120, 84)
        self.out = nn.Linear(84, classes)
        self.dropout = dropout

    def kaiming_init(self):
        for m in [*self.convs, self.fc1, self.fc2, self.out]:
            nn.init.kaiming_normal_(m.weight, nonlinearity="relu")
            nn.init.zeros_(m.bias)

    def forward(self, x):
        for i, conv in enumerate(self.convs):
            x = F.relu(conv(x))
            # ceil_mode clips the trailing window, so padded cells are not averaged
            x = F.avg_pool2d(x, 2, 2, ceil_mode=True)
            if i >= 3:
                x = F.dropout(x, self.dropout, self.training)
        x = torch.flatten(x, 1)
        x = F.relu(self.fc1(x))
        x = F.relu(self.fc2(x))
        return self.out(x)


def load_mnist(root):
    xs, ys = [], []
    for split in ("train", "t10k"):
        xs.append(snnport.load_idx(os.path.join(root, f"{split}-images-idx3-ubyte")))
        ys.append(np.asarray(snnport.load_idx_labels(os.path.join(root, f"{split}-labels-idx1-ubyte"))))
    return np.concatenate(xs).astype(np.float32), np.concatenate(ys).astype(np.int64)


def accuracy(model, x, y, batch=1000):
    model.eval()
    hits = 0
    with torch.no_grad():
        for i in range(0, len(x), batch):
            hits += (model(x[i : i + batch]).argmax(1) == y[i : i + batch]).sum().item()
    return hits / len(x)


def export(model, name, path, meta):
    net = snnport.vgg9_skeleton(10)
    net.name = name
    params = [*model.convs, model.fc1, model.fc2, model.out]
    idx = [i for i, layer in enumerate(net.layers) if layer.parameter_count > 0]
    for i, mod in zip(idx, params):
        net.set_parameters(i, mod.weight.detach().numpy(), mod.bias.detach().numpy())
    net.metadata = {k: str(v) for k, v in meta.items()}
    assert not net.violations(), net.violations()
    net.save(path)
    return net


def train(x, y, split, args, tag):
    torch.manual_seed(args.seed)
    tr, va, te = split
    xt = torch.from_numpy(x).unsqueeze(1)
    yt = torch.from_numpy(y)
    model = VGG9(dropout=args.dropout)
    if args.init == "kaiming":
        model.kaiming_init()
    opt = torch.optim.Adam(model.parameters(), lr=args.lr, weight_decay=args.weight_decay)
    gen = torch.Generator().manual_seed(args.seed)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, args.epochs) if args.schedule == "cosine" else None
    for epoch in range(args.epochs):
        model.train()
        t0 = time.time()
        order = torch.from_numpy(tr)[torch.randperm(len(tr), generator=gen)]
        total = 0.0
        for i in range(0, len(order), args.batch):
            b = order[i : i + args.batch]
            loss = F.cross_entropy(model(xt[b]), yt[b])
            if not torch.isfinite(loss):
                raise RuntimeError(f"{tag}: loss diverged at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(b)
        if sched is not None:
            sched.step()
        val = accuracy(model, xt[va], yt[va])
        print(f"{tag} epoch {epoch + 1}/{args.epochs} loss {total / len(tr):.4f} val {val:.4f} "
              f"({time.time() - t0:.0f}s)", flush=True)
    metrics = {
        "train_accuracy": accuracy(model, xt[tr], yt[tr]),
        "val_accuracy": accuracy(model, xt[va], yt[va]),
        "test_accuracy": accuracy(model, xt[te], yt[te]),
    }
    print(tag, json.dumps(metrics), flush=True)
    return model, metrics


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", default=os.path.expanduser("~/.cache/snnport/mnist"))
    ap.add_argument("--out", default="tests/fixtures")
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--weight-decay", type=float, default=0.0)
    ap.add_argument("--dropout", type=float, default=0.25)
    ap.add_argument("--init", choices=["default", "kaiming"], default="kaiming")
    ap.add_argument("--schedule", choices=["constant", "cosine"], default="cosine")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--subset", type=int, default=1000)
    ap.add_argument("--only", choices=["mnist", "edge"], default=None)
    args = ap.parse_args()
    torch.set_num_threads(os.cpu_count() or 1)
    os.makedirs(args.out, exist_ok=True)

    x, y = load_mnist(args.data)
    perm = np.random.default_rng(args.seed).permutation(len(x))
    n_tr, n_va = int(0.6 * len(x)), int(0.2 * len(x))
    split = (perm[:n_tr], perm[n_tr : n_tr + n_va], perm[n_tr + n_va :])
    calib, test = split[0][: args.subset], split[2][: args.subset]
    snnport.save_idx_dataset(x[calib], y[calib].tolist(), f"{args.out}/mnist_calib-images.idx",
                             f"{args.out}/mnist_calib-labels.idx")
    snnport.save_idx_dataset(x[test], y[test].tolist(), f"{args.out}/mnist_test-images.idx",
                             f"{args.out}/mnist_test-labels.idx")

    base = {"epochs": args.epochs, "batch": args.batch, "optimizer": f"adam lr={args.lr} weight_decay={args.weight_decay} schedule={args.schedule}",
            "init": args.init,
            "dropout": f"{args.dropout} after pool4-6", "seed": args.seed, "split": "60/20/20 of train+t10k"}
    runs = []
    if args.only in (None, "mnist"):
        runs.append(("mnist", x, "mnist_vgg9.snnc", {}))
    if args.only in (None, "edge"):
        edges = snnport.canny_batch(x)
        runs.append(("edge_mnist", edges.reshape(x.shape),
                     "edge_mnist_vgg9.snnc", {"canny": "sigma=1 kernel=5 low=0.1 high=0.2"}))
    for tag, xs, fname, extra in runs:
        model, metrics = train(xs, y, split, args, tag)
        net = export(model, f"{tag}_vgg9", f"{args.out}/{fname}", {**base, **extra, **metrics})
        probe = split[2][:2000]
        pred = np.asarray(net.predict(xs[probe]))
        mine = accuracy(model, torch.from_numpy(xs[probe]).unsqueeze(1), torch.from_numpy(y[probe]))
        print(tag, f"first 2000 test images: torch {mine:.4f} engine {float((pred == y[probe]).mean()):.4f}", flush=True)


if __name__ == "__main__":
    main()
