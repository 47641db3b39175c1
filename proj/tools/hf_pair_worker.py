"""Pair-classifier worker for the external backend.

Speaks the JSON-lines protocol of ExternalPairEncoder on stdin/stdout and wraps
a Hugging Face sequence classification model with a two-way head.
"""
import json
import math
import os
import random
import sys

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer


class Worker:
    def __init__(self):
        self.model = None
        self.tokenizer = None
        self.optimizer = None
        self.scheduler = None
        self.device = "cpu"
        self.max_len = 256
        self.grad_clip = 1.0

    def init(self, cfg):
        name = cfg.get("base_checkpoint") or cfg.get("model")
        if not name:
            raise ValueError("init needs 'base_checkpoint' or 'model'")
        seed = int(cfg.get("seed", 0)) % (2**32)
        random.seed(seed)
        torch.manual_seed(seed)
        device = cfg.get("device", "auto")
        if device == "auto":
            device = "cuda" if torch.cuda.is_available() else "cpu"
        self.device = device
        self.max_len = int(cfg.get("max_seq_length", 256))
        dropout = float(cfg.get("dropout", 0.1))
        self.tokenizer = AutoTokenizer.from_pretrained(name)
        # NLI checkpoints come with a 3-way head; replace it with a 2-way one
        self.model = AutoModelForSequenceClassification.from_pretrained(
            name,
            num_labels=2,
            ignore_mismatched_sizes=True,
            hidden_dropout_prob=dropout,
        ).to(self.device)
        return {}

    def _encode(self, queries, texts):
        enc = self.tokenizer(
            list(queries),
            list(texts),
            truncation=True,
            max_length=self.max_len,
            padding=True,
            return_tensors="pt",
        )
        return {k: v.to(self.device) for k, v in enc.items()}

    def forward(self, req):
        pairs = req["pairs"]
        self.model.eval()
        out = []
        with torch.no_grad():
            for i in range(0, len(pairs), 64):
                chunk = pairs[i : i + 64]
                enc = self._encode([p[0] for p in chunk], [p[1] for p in chunk])
                logits = self.model(**enc).logits.float().cpu().tolist()
                out.extend(logits)
        return {"logits": out}

    def start_training(self, req):
        opt = req["optimizer"]
        self.grad_clip = float(opt.get("grad_clip", 1.0))
        self.optimizer = torch.optim.AdamW(
            self.model.parameters(),
            lr=float(opt["lr"]),
            betas=(float(opt.get("beta1", 0.9)), float(opt.get("beta2", 0.999))),
            eps=float(opt.get("epsilon", 1e-8)),
            weight_decay=float(opt.get("weight_decay", 0.0)),
        )
        warmup = int(opt.get("warmup_steps", 0))
        self.scheduler = torch.optim.lr_scheduler.LambdaLR(
            self.optimizer, lambda step: min(1.0, (step + 1) / warmup) if warmup > 0 else 1.0
        )
        return {}

    def train_step(self, req):
        batch = req["batch"]
        micro = int(req.get("micro_batch") or 0) or len(batch)
        self.model.train()
        self.optimizer.zero_grad()
        total = 0.0
        for i in range(0, len(batch), micro):
            chunk = batch[i : i + micro]
            enc = self._encode([b["query"] for b in chunk], [b["text"] for b in chunk])
            labels = torch.tensor([int(b["target"]) for b in chunk], device=self.device)
            logits = self.model(**enc).logits
            loss = torch.nn.functional.cross_entropy(logits, labels, reduction="sum") / len(batch)
            loss.backward()
            total += float(loss)
        if not math.isfinite(total):
            raise FloatingPointError(f"non-finite loss {total}")
        if self.grad_clip > 0:
            torch.nn.utils.clip_grad_norm_(self.model.parameters(), self.grad_clip)
        self.optimizer.step()
        self.scheduler.step()
        return {"loss": total}

    def save(self, req):
        os.makedirs(req["dir"], exist_ok=True)
        self.model.save_pretrained(req["dir"])
        self.tokenizer.save_pretrained(req["dir"])
        return {}

    def load(self, req):
        self.model = AutoModelForSequenceClassification.from_pretrained(req["dir"]).to(self.device)
        return {}


def main():
    worker = Worker()
    out = sys.stdout
    # keep library chatter away from the protocol channel
    sys.stdout = sys.stderr
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            op = req.get("op")
            if op == "shutdown":
                out.write(json.dumps({"ok": True}) + "\n")
                out.flush()
                break
            if op == "init":
                reply = worker.init(req.get("config", {}))
            elif op in ("forward", "start_training", "train_step", "save", "load"):
                reply = getattr(worker, op)(req)
            else:
                raise ValueError(f"unknown op {op!r}")
            reply["ok"] = True
        except Exception as e:  # reported to the caller, which raises TrainingError
            reply = {"ok": False, "error": f"{type(e).__name__}: {e}"}
        out.write(json.dumps(reply) + "\n")
        out.flush()


if __name__ == "__main__":
    main()
