"""Minimal stand-in for tools/hf_pair_worker.py used by the external backend tests.

A bag-of-words logistic scorer trained with plain SGD. With {"fail": op} in the
init config it answers that op with an error.
"""
import json
import math
import os
import sys


def features(query, text):
    return [query + "|" + tok for tok in text.lower().split()] + [query + "|<bias>"]


class Fake:
    def __init__(self):
        self.w = {}
        self.lr = 0.1
        self.fail = None
        self.seed = 0

    def score(self, query, text):
        f = features(query, text)
        return sum(self.w.get(k, 0.0) for k in f) / len(f)

    def handle(self, req):
        op = req["op"]
        if op == "init":
            self.fail = req.get("config", {}).get("fail")
        if op == self.fail:
            raise RuntimeError("scripted failure")
        if op == "init":
            cfg = req.get("config", {})
            self.seed = cfg.get("seed", 0)
            base = cfg.get("base_checkpoint")
            if base and os.path.exists(os.path.join(base, "fake.json")):
                self.load({"dir": base})
            return {}
        if op == "forward":
            return {"logits": [[0.0, self.score(q, t)] for q, t in req["pairs"]]}
        if op == "start_training":
            self.lr = float(req["optimizer"]["lr"])
            return {}
        if op == "train_step":
            batch = req["batch"]
            grads = {}
            loss = 0.0
            for ex in batch:
                s = self.score(ex["query"], ex["text"])
                p = 1.0 / (1.0 + math.exp(-s))
                loss += -math.log(p if ex["target"] else 1.0 - p) / len(batch)
                f = features(ex["query"], ex["text"])
                for k in f:
                    grads[k] = grads.get(k, 0.0) + (p - ex["target"]) / len(f) / len(batch)
            for k, g in grads.items():
                self.w[k] = self.w.get(k, 0.0) - self.lr * g
            return {"loss": loss}
        if op == "save":
            os.makedirs(req["dir"], exist_ok=True)
            with open(os.path.join(req["dir"], "fake.json"), "w") as fh:
                json.dump(self.w, fh)
            return {}
        if op == "load":
            return self.load(req)
        raise ValueError("unknown op " + str(op))

    def load(self, req):
        with open(os.path.join(req["dir"], "fake.json")) as fh:
            self.w = json.load(fh)
        return {}


def main():
    fake = Fake()
    for line in sys.stdin:
        req = json.loads(line)
        if req.get("op") == "shutdown":
            print(json.dumps({"ok": True}), flush=True)
            return
        try:
            reply = fake.handle(req)
            reply["ok"] = True
        except Exception as e:
            reply = {"ok": False, "error": str(e)}
        print(json.dumps(reply), flush=True)


if __name__ == "__main__":
    main()
