"""Training loop, schedule, checkpointing, inference, and score fusion."""

import csv
import json
import zlib
from pathlib import Path

import numpy as np
import torch

from . import config as C
from .data import binarize_targets, load_frame, load_flow_pair
from .losses import total_loss
from .metrics import evaluate
from .model import EmotionNet, PredictionSet, apply_partial_bn, consensus, make_backbone
from .sampler import TEST_UNIFORM, TRAIN_RANDOM, sample_segments
from .streams import rgb_body_snippet, rgb_context_snippet, stack_flow
from .taxonomy import mean_positive_embedding


def _seed_for(*parts):
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def build_network(cfg, emb_dim):
    if cfg.streams == C.RGB_BC:
        net = EmotionNet(make_backbone(cfg.backbone, 3),
                         make_backbone(cfg.context_backbone, 3), emb_dim=emb_dim)
    elif cfg.streams == C.RGB_B:
        net = EmotionNet(make_backbone(cfg.backbone, 3), emb_dim=emb_dim)
    else:  # flow_b
        net = EmotionNet(make_backbone(cfg.backbone, 2 * cfg.flow_snippet_len),
                         emb_dim=emb_dim)
    if cfg.partial_bn:
        apply_partial_bn(net)
    return net


def _instance_arrays(inst, root, cfg, mode, seed=None):
    """Per-segment input arrays for one instance: (body, context_or_None)."""
    if cfg.streams == C.FLOW_B:
        plan = sample_segments(inst.n_frames, cfg.k_train if mode == TRAIN_RANDOM
                               else cfg.k_test, cfg.flow_snippet_len, mode, seed)
        segs = []
        for s in range(len(plan.segment_starts)):
            idxs = plan.snippet_indices(s)
            pairs = [load_flow_pair(*inst.flow_paths(root, inst.frame_start + i))
                     for i in idxs]
            region = inst.region_for(inst.frame_start + idxs[0])
            snip = stack_flow(pairs, region, cfg.image_size, frame_indices=idxs)
            segs.append((snip.data, None))
        return segs
    k = cfg.k_train if mode == TRAIN_RANDOM else cfg.k_test
    plan = sample_segments(inst.n_frames, k, cfg.rgb_snippet_len, mode, seed)
    segs = []
    for s in range(len(plan.segment_starts)):
        idx = plan.snippet_indices(s)[0]
        abs_idx = inst.frame_start + idx
        frame = load_frame(inst.frame_path(root, abs_idx))
        region = inst.region_for(abs_idx)
        body = rgb_body_snippet(frame, region, cfg.image_size, abs_idx).data
        ctx = (rgb_context_snippet(frame, region, cfg.image_size, abs_idx).data
               if cfg.streams == C.RGB_BC else None)
        segs.append((body, ctx))
    return segs


def _batch_tensors(instances, root, cfg, mode, epoch):
    bodies, ctxs = [], []
    for inst in instances:
        seed = _seed_for(cfg.seed, epoch, zlib.crc32(inst.clip_id.encode()),
                         inst.person_id)
        for body, ctx in _instance_arrays(inst, root, cfg, mode, seed):
            bodies.append(body)
            if ctx is not None:
                ctxs.append(ctx)
    body_t = torch.from_numpy(np.stack(bodies))
    ctx_t = torch.from_numpy(np.stack(ctxs)) if ctxs else None
    return body_t, ctx_t


def _emb_targets(instances, taxonomy, threshold):
    targets, mask = [], []
    for inst in instances:
        pos = np.flatnonzero(binarize_targets(inst.categorical, threshold))
        if len(pos):
            targets.append(mean_positive_embedding(taxonomy, pos))
            mask.append(1.0)
        else:
            targets.append(np.zeros(taxonomy.dim))
            mask.append(0.0)
    return np.stack(targets), np.asarray(mask)


def train(cfg, train_set, val_set, taxonomy, run_dir):
    """Train one network; writes loss log, history, and per-epoch checkpoints."""
    run_dir = Path(run_dir)
    (run_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)
    torch.set_num_threads(1)
    net = build_network(cfg, taxonomy.dim).double()
    opt = torch.optim.SGD(net.parameters(), lr=cfg.lr, momentum=cfg.momentum,
                          weight_decay=cfg.weight_decay)
    (run_dir / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2))

    loss_log = open(run_dir / "loss_log.csv", "w", newline="")
    loss_writer = csv.writer(loss_log)
    loss_writer.writerow(["step", "cls1", "cls2", "cont", "emb", "total"])
    hist_rows = []
    step = 0
    stop = False
    for epoch in range(cfg.epochs):
        for group in opt.param_groups:
            group["lr"] = cfg.lr_at(epoch)
        net.train()
        order = np.random.default_rng(_seed_for(cfg.seed, epoch)).permutation(
            len(train_set.instances))
        epoch_losses = []
        for b0 in range(0, len(order), cfg.batch_size):
            batch = [train_set.instances[i] for i in order[b0:b0 + cfg.batch_size]]
            body_t, ctx_t = _batch_tensors(batch, train_set.root, cfg,
                                           TRAIN_RANDOM, epoch)
            cat, cont, emb = net(body_t.double(),
                                 ctx_t.double() if ctx_t is not None else None)
            k = cfg.k_train
            B = len(batch)
            cat = cat.view(B, k, -1).mean(dim=1)
            cont = cont.view(B, k, -1).mean(dim=1)
            emb = emb.view(B, k, -1).mean(dim=1)
            cat_scores = torch.tensor(np.stack([i.categorical for i in batch]))
            vad = torch.tensor(np.stack([i.vad for i in batch]))
            targets, mask = _emb_targets(batch, taxonomy, cfg.threshold)
            bd = total_loss(cat, cat_scores, cont, vad, emb,
                            torch.tensor(targets), mask if cfg.emb_loss else
                            np.zeros_like(mask), threshold=cfg.threshold,
                            squared_emb=cfg.squared_emb)
            loss = bd.cls1 + bd.cls2 + bd.cont
            if cfg.emb_loss:
                loss = loss + bd.emb
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at step {step}, batch clips "
                    f"{[i.clip_id for i in batch]}: {bd.as_floats()}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            vals = bd.as_floats()
            vals["emb"] = vals["emb"] if cfg.emb_loss else 0.0
            vals["total"] = float(loss.detach())
            loss_writer.writerow([step] + [f"{vals[k]:.8f}" for k in
                                           ("cls1", "cls2", "cont", "emb", "total")])
            epoch_losses.append([vals[k] for k in
                                 ("cls1", "cls2", "cont", "emb", "total")])
            step += 1
            if cfg.max_steps and step >= cfg.max_steps:
                stop = True
                break

        mean_losses = np.mean(epoch_losses, axis=0)
        report = evaluate(predict_dataset(net, val_set, cfg), val_set, cfg.threshold)
        hist_rows.append([epoch] + [f"{v:.8f}" for v in mean_losses] +
                         [f"{report.m_ap:.8f}", f"{report.m_ra:.8f}",
                          f"{report.m_r2:.8f}", f"{report.ers:.8f}"])
        save_checkpoint(run_dir / "checkpoints" / f"epoch_{epoch:03d}.pt",
                        net, cfg, taxonomy.dim, epoch, report.ers)
        if stop:
            break
    loss_log.close()

    with open(run_dir / "history.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "cls1", "cls2", "cont", "emb", "total",
                    "val_mAP", "val_mRA", "val_mR2", "val_ers"])
        w.writerows(hist_rows)
    return run_dir


def save_checkpoint(path, net, cfg, emb_dim, epoch, val_ers):
    path = Path(path)
    torch.save({"model": net.state_dict(), "config": cfg.to_dict(),
                "emb_dim": emb_dim, "epoch": epoch}, path)
    path.with_suffix(".json").write_text(json.dumps({
        "epoch": epoch, "val_ers": val_ers, "streams": [cfg.streams],
        "config_hash": cfg.config_hash()}, indent=2))


def load_checkpoint(path):
    blob = torch.load(path, weights_only=False)
    cfg = C.RunConfig(**blob["config"])
    net = build_network(cfg, blob["emb_dim"]).double()
    net.load_state_dict(blob["model"])
    net.eval()
    return net, cfg


def predict_instance(net, inst, root, cfg, k_test=None):
    """Test-mode prediction: uniform-center segments, forward, consensus."""
    eval_cfg = cfg if k_test is None else cfg.with_overrides(k_test=k_test)
    segs = _instance_arrays(inst, root, eval_cfg, TEST_UNIFORM)
    body_t = torch.from_numpy(np.stack([b for b, _ in segs])).double()
    ctx = [c for _, c in segs if c is not None]
    ctx_t = torch.from_numpy(np.stack(ctx)).double() if ctx else None
    was_training = net.training
    net.eval()
    with torch.no_grad():
        cat, cont, emb = net(body_t, ctx_t)
    if was_training:
        net.train()
    per_seg = [PredictionSet(categorical=cat[i].numpy(), continuous=cont[i].numpy(),
                             projected=emb[i].numpy()) for i in range(len(segs))]
    return consensus(per_seg)


def predict_dataset(net, dataset, cfg, k_test=None):
    return {(i.clip_id, i.person_id): predict_instance(net, i, dataset.root, cfg, k_test)
            for i in dataset}


def write_predictions(path, predictions, order):
    """JSON-lines rows: clip_id, person_id, 26 scores, 3 continuous values."""
    with open(path, "w", encoding="utf-8") as fh:
        for key in order:
            p = predictions[key]
            fh.write(json.dumps({
                "clip_id": key[0], "person_id": key[1],
                "categorical": [round(float(v), 10) for v in p.categorical],
                "continuous": [round(float(v), 10) for v in p.continuous],
            }) + "\n")


def read_predictions(path):
    """Returns (dict keyed by (clip_id, person_id), key order)."""
    preds, order = {}, []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, ln in enumerate(fh, 1):
            if not ln.strip():
                continue
            try:
                rec = json.loads(ln)
            except json.JSONDecodeError as e:
                raise ValueError(f"malformed prediction line {line_no}: {e}") from e
            key = (rec["clip_id"], rec["person_id"])
            if key in preds:
                raise ValueError(f"duplicate prediction {key}, line {line_no}")
            preds[key] = {"categorical": np.asarray(rec["categorical"], dtype=np.float64),
                          "continuous": np.asarray(rec["continuous"], dtype=np.float64)}
            order.append(key)
    return preds, order


def predict(checkpoint, dataset, out_path, k_test=None):
    net, cfg = load_checkpoint(checkpoint)
    preds = predict_dataset(net, dataset, cfg, k_test)
    order = [(i.clip_id, i.person_id) for i in dataset]
    write_predictions(out_path, preds, order)
    return out_path


def fuse_scores(pred_files, out_path):
    """Average score fusion of aligned per-network prediction files."""
    if not pred_files:
        raise ValueError("no prediction files to fuse")
    loaded = [read_predictions(f) for f in pred_files]
    base_keys = set(loaded[0][0])
    for (preds, _), f in zip(loaded[1:], pred_files[1:]):
        if set(preds) != base_keys:
            raise ValueError(f"prediction file {f} not aligned on instances")
    order = loaded[0][1]
    fused = {}
    for key in order:
        fused[key] = {
            "categorical": np.mean([p[0][key]["categorical"] for p in loaded], axis=0),
            "continuous": np.mean([p[0][key]["continuous"] for p in loaded], axis=0)}
    with open(out_path, "w", encoding="utf-8") as fh:
        for key in order:
            fh.write(json.dumps({
                "clip_id": key[0], "person_id": key[1],
                "categorical": [float(v) for v in fused[key]["categorical"]],
                "continuous": [float(v) for v in fused[key]["continuous"]]}) + "\n")
    return out_path


def select_best_epoch(ers_history):
    """Epoch with the best validation ERS; ties break to the earliest epoch."""
    ers = np.asarray(list(ers_history), dtype=np.float64)
    if ers.size == 0:
        raise ValueError("empty history")
    return int(np.argmax(ers))


def read_history_ers(history_csv):
    with open(history_csv, "r", newline="") as fh:
        return [float(row["val_ers"]) for row in csv.DictReader(fh)]
