"""Host side of the neural-scorer plugin protocol, plus a deterministic mock.

A scorer plugin is a child process speaking newline-delimited JSON over
stdin/stdout. The host sends ``{"v":1,"hello":true}``; the plugin answers
with its supported metrics (and, for provenance, whatever model identifiers
it loaded). Each request is answered in order; one request is in flight per
process at a time.

``python -m xlforge.scorer`` runs the built-in mock plugin used by the
offline test suite: bertscore-mock is the character-bigram Dice coefficient,
comet-mock is 2*Dice - 1.
"""

from __future__ import annotations

import json
import select
import shlex
import subprocess
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT = 30.0
NEURAL_METRICS = ("bertscore", "comet")


class ScorerError(Exception):
    """Base class for plugin failures."""


class SpawnError(ScorerError):
    pass


class HandshakeError(ScorerError):
    pass


class TransportError(ScorerError):
    """Plugin died or the pipe broke; the metric is unavailable."""


class ProtocolError(ScorerError):
    """Plugin answered, but not with what the protocol requires."""


class UnsupportedMetricError(ScorerError):
    pass


@dataclass(frozen=True)
class ScorePair:
    candidate: str
    reference: str
    source: Optional[str] = None


@dataclass(frozen=True)
class ScoreRequest:
    request_id: int
    metric: str
    pairs: Sequence[ScorePair]

    def validate(self) -> None:
        if self.metric not in NEURAL_METRICS:
            raise UnsupportedMetricError(f"unknown metric {self.metric!r}")
        if not self.pairs:
            raise ValueError("score request needs at least one pair")
        if self.metric == "comet":
            for i, pair in enumerate(self.pairs):
                if pair.source is None:
                    raise ValueError(f"comet pair {i} lacks source text")


@dataclass(frozen=True)
class ScoreEntry:
    value: float
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None


@dataclass(frozen=True)
class ScoreResponse:
    request_id: int
    scores: List[ScoreEntry]


def _char_bigrams(text: str) -> set:
    return {text[i : i + 2] for i in range(len(text) - 1)}


def mock_score(metric: str, candidate: str, reference: str) -> float:
    """Deterministic stand-in for a neural scorer.

    bertscore-mock = character-bigram Dice coefficient; comet-mock maps the
    same Dice onto [-1, 1]. Symmetric in (candidate, reference).
    """
    a = _char_bigrams(candidate)
    b = _char_bigrams(reference)
    if not a and not b:
        dice = 1.0 if candidate == reference else 0.0
    else:
        dice = 2.0 * len(a & b) / (len(a) + len(b))
    if metric == "bertscore":
        return dice
    if metric == "comet":
        return 2.0 * dice - 1.0
    raise UnsupportedMetricError(f"unknown metric {metric!r}")


class ScorerPlugin:
    """Handle to one running plugin process.

    Owned by one worker at a time; wrap in a lock to share across threads.
    """

    def __init__(self, proc: subprocess.Popen, metrics: List[str], models: Dict[str, str],
                 command_line: str):
        self.proc = proc
        self.metrics = list(metrics)
        self.models = dict(models)
        self.command_line = command_line
        self._next_id = 1

    def supports(self, metric: str) -> bool:
        return metric in self.metrics

    def score_batch(self, request: ScoreRequest) -> ScoreResponse:
        """Send one request, read one response; values pass through untouched."""
        request.validate()
        if not self.supports(request.metric):
            raise UnsupportedMetricError(
                f"plugin {self.command_line!r} does not support {request.metric}"
            )
        payload = {
            "id": request.request_id,
            "metric": request.metric,
            "pairs": [_pair_to_wire(p) for p in request.pairs],
        }
        line = json.dumps(payload, ensure_ascii=False)
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TransportError(f"plugin pipe closed: {exc}") from exc

        reply = self.proc.stdout.readline()
        if not reply:
            raise TransportError("plugin exited before answering")
        try:
            obj = json.loads(reply)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"unparseable plugin response: {reply!r}") from exc
        if obj.get("id") != request.request_id:
            raise ProtocolError(
                f"response id {obj.get('id')!r} does not match request {request.request_id}"
            )
        raw_scores = obj.get("scores")
        if not isinstance(raw_scores, list) or len(raw_scores) != len(request.pairs):
            raise ProtocolError("response scores missing or arity mismatch")
        scores = []
        for entry in raw_scores:
            if not isinstance(entry, dict) or "value" not in entry:
                raise ProtocolError(f"malformed score entry: {entry!r}")
            scores.append(
                ScoreEntry(
                    value=float(entry["value"]),
                    precision=entry.get("p"),
                    recall=entry.get("r"),
                    f1=entry.get("f1"),
                )
            )
        return ScoreResponse(request_id=request.request_id, scores=scores)

    def score(self, metric: str, pairs: Sequence[ScorePair]) -> List[ScoreEntry]:
        request = ScoreRequest(self._next_id, metric, list(pairs))
        self._next_id += 1
        return self.score_batch(request).scores

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

    def __enter__(self) -> "ScorerPlugin":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _pair_to_wire(pair: ScorePair) -> Dict[str, str]:
    wire = {"cand": pair.candidate, "ref": pair.reference}
    if pair.source is not None:
        wire["src"] = pair.source
    return wire


def _read_line_with_timeout(proc: subprocess.Popen, timeout: float) -> str:
    ready, _, _ = select.select([proc.stdout], [], [], timeout)
    if not ready:
        raise HandshakeError(f"no handshake within {timeout} s")
    return proc.stdout.readline()


def start_plugin(command_line: str, timeout: float = HANDSHAKE_TIMEOUT) -> ScorerPlugin:
    """Spawn a plugin process and perform the version-1 handshake."""
    argv = shlex.split(command_line)
    try:
        proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
    except OSError as exc:
        raise SpawnError(f"cannot start plugin {command_line!r}: {exc}") from exc

    try:
        proc.stdin.write(json.dumps({"v": PROTOCOL_VERSION, "hello": True}) + "\n")
        proc.stdin.flush()
        reply = _read_line_with_timeout(proc, timeout)
        if not reply:
            raise HandshakeError("plugin closed its stdout during handshake")
        obj = json.loads(reply)
        if obj.get("v") != PROTOCOL_VERSION:
            raise HandshakeError(
                f"protocol version mismatch: host {PROTOCOL_VERSION}, plugin {obj.get('v')!r}"
            )
        metrics = obj.get("metrics")
        if not isinstance(metrics, list) or not metrics:
            raise HandshakeError(f"handshake lacks metrics list: {reply!r}")
        models = obj.get("models") or {}
    except (HandshakeError, json.JSONDecodeError, BrokenPipeError, OSError) as exc:
        proc.kill()
        proc.wait()
        if isinstance(exc, HandshakeError):
            raise
        raise HandshakeError(f"handshake failed: {exc}") from exc

    return ScorerPlugin(proc, metrics, models, command_line)


def _serve_mock(argv: Optional[List[str]] = None) -> int:
    """Run the deterministic mock plugin (the ``python -m xlforge.scorer`` entry).

    Flags let tests inject sentinel values and failure modes:
    --metrics a,b           advertise a capability subset
    --bertscore-constant X  answer every bertscore pair with X
    --comet-constant X      answer every comet pair with X
    --garble                emit invalid JSON instead of responses
    --exit-after N          exit abruptly after N responses
    """
    import argparse

    parser = argparse.ArgumentParser(prog="xlforge.scorer")
    parser.add_argument("--metrics", default="bertscore,comet")
    parser.add_argument("--bertscore-constant", type=float, default=None)
    parser.add_argument("--comet-constant", type=float, default=None)
    parser.add_argument("--garble", action="store_true")
    parser.add_argument("--exit-after", type=int, default=None)
    args = parser.parse_args(argv)

    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    constants = {"bertscore": args.bertscore_constant, "comet": args.comet_constant}

    stdin = sys.stdin
    stdout = sys.stdout

    hello = stdin.readline()
    if not hello:
        return 0
    handshake = {
        "v": PROTOCOL_VERSION,
        "metrics": metrics,
        "models": {m: f"mock-dice-bigram/{m}" for m in metrics},
    }
    stdout.write(json.dumps(handshake) + "\n")
    stdout.flush()

    answered = 0
    for line in stdin:
        if not line.strip():
            continue
        if args.exit_after is not None and answered >= args.exit_after:
            return 3
        req = json.loads(line)
        metric = req["metric"]
        if args.garble:
            stdout.write("this is not json\n")
            stdout.flush()
            continue
        scores = []
        for pair in req["pairs"]:
            constant = constants.get(metric)
            value = (
                constant
                if constant is not None
                else mock_score(metric, pair["cand"], pair["ref"])
            )
            entry = {"value": value}
            if metric == "bertscore":
                entry.update({"p": value, "r": value, "f1": value})
            scores.append(entry)
        stdout.write(json.dumps({"id": req["id"], "scores": scores}) + "\n")
        stdout.flush()
        answered += 1
    return 0


def mock_plugin_command(*extra_args: str) -> str:
    """Command line that starts the built-in mock plugin."""
    parts = [shlex.quote(sys.executable), "-m", "xlforge.scorer", *extra_args]
    return " ".join(parts)


if __name__ == "__main__":
    sys.exit(_serve_mock())
