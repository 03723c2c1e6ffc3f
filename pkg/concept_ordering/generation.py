"""Bridge to an external text generator: prompts, transport, retries, replay.

Wire protocol: POST {model, prompt, stop, max_tokens} -> {text}.
"""
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import requests
from tenacity import (Retrying, before_sleep_log, retry_if_exception_type,
                      stop_after_attempt, wait_exponential)
from tqdm.auto import tqdm

from concept_ordering.errors import (ConfigError, EmptyGenerationError, InvalidInputError,
                                     TransientTransportError, TransportError)
from concept_ordering.ordering.strategies import InputFormat, parse_input
from concept_ordering.utils import dump_json_line, ensure_parent_dir, read_jsonl

logger = logging.getLogger(__name__)

DEFAULT_PROMPT_PREFIX = "Generate a sentence containing all the concepts in the concept set:"
ALIGNMENT_PROMPT = ("Given a concept list: [{concepts}], please generate a sentence "
                    "that aligns the ordering of the concepts:")
RETRYABLE_STATUS_CODES = {408, 429, 500, 502, 503, 504}


@dataclass(frozen=True)
class GeneratorSpec:
    endpoint: str = None
    model: str = "default"
    prompt_prefix: str = DEFAULT_PROMPT_PREFIX
    separator: str = " ->"
    # the ending token is written "/n" in the prompt recipe; read as a newline
    stop_sequence: str = "\n"
    prompt_style: str = "completion"
    timeout: float = 30.0
    max_retries: int = 3
    backoff: float = 1.0
    max_backoff: float = 30.0
    max_tokens: int = 64
    requests_per_minute: float = 60.0
    concurrency: int = 4
    api_key_env: str = "CONCEPT_ORDERING_API_KEY"

    def __post_init__(self):
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be > 0, got {self.timeout}")
        if self.max_retries < 0:
            raise ConfigError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.concurrency < 1:
            raise ConfigError(f"concurrency must be >= 1, got {self.concurrency}")
        if self.requests_per_minute <= 0:
            raise ConfigError(f"requests_per_minute must be > 0, got {self.requests_per_minute}")
        if self.prompt_style not in ("completion", "alignment"):
            raise ConfigError(f"Invalid prompt style {self.prompt_style} - "
                              "options are [completion, alignment]")

    def describe(self):
        return {k: v for k, v in asdict(self).items() if k != "api_key_env"}


def build_prompt(spec, formatted_concepts):
    if not formatted_concepts or not formatted_concepts.strip():
        raise InvalidInputError("Cannot build a prompt without concepts")
    if spec.prompt_style == "alignment":
        return ALIGNMENT_PROMPT.format(concepts=formatted_concepts)
    return f"{spec.prompt_prefix} {formatted_concepts}{spec.separator}"


def fine_tuning_record(spec, source, target):
    """prompt/completion pair: completion opens with a space and ends with the stop sequence."""
    return {"prompt": build_prompt(spec, source), "completion": f" {target}{spec.stop_sequence}"}


def prompt_completion_pairs(spec, pairs):
    for pair in pairs:
        yield fine_tuning_record(spec, pair["source"], pair["target"])


def truncate_completion(text, stop_sequence):
    if stop_sequence and stop_sequence in text:
        text = text[:text.index(stop_sequence)]
    return text.strip()


class TokenBucket:
    """Thread-safe token bucket allowing `rate_per_minute` requests per minute."""

    def __init__(self, rate_per_minute, capacity=1, clock=time.monotonic, sleep=time.sleep):
        self.rate = rate_per_minute / 60.0
        self.capacity = capacity
        self.tokens = float(capacity)
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self.lock = threading.Lock()

    def _refill(self):
        now = self.clock()
        self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
        self.updated = now

    def acquire(self):
        while True:
            with self.lock:
                self._refill()
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self.sleep(wait)


class HttpGenerator:

    def __init__(self, spec, session=None):
        if not spec.endpoint:
            raise ConfigError("HTTP generation needs an endpoint")
        self.spec = spec
        self.session = session or requests.Session()
        self.api_key = os.environ.get(spec.api_key_env)

    def complete(self, prompt):
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {"model": self.spec.model, "prompt": prompt,
                   "stop": self.spec.stop_sequence, "max_tokens": self.spec.max_tokens}
        try:
            response = self.session.post(self.spec.endpoint, json=payload, headers=headers,
                                         timeout=self.spec.timeout)
        except (requests.ConnectionError, requests.Timeout) as e:
            raise TransientTransportError(f"{type(e).__name__}: {e}") from e
        if response.status_code in RETRYABLE_STATUS_CODES:
            raise TransientTransportError(f"HTTP {response.status_code} from {self.spec.endpoint}")
        if response.status_code >= 400:
            raise TransportError(f"HTTP {response.status_code} from {self.spec.endpoint}: "
                                 f"{response.text[:200]}")
        try:
            return response.json()["text"]
        except (ValueError, KeyError) as e:
            raise TransportError(f"Malformed response from {self.spec.endpoint}: {e}") from e


class StubGenerator:
    """Offline generator: a fixed template over the concepts named in the prompt."""

    def __init__(self, spec, fmt=InputFormat.SPACE):
        self.spec = spec
        self.fmt = InputFormat(fmt)

    def concepts_from_prompt(self, prompt):
        if self.spec.prompt_style == "alignment":
            body = prompt[prompt.index("[") + 1:prompt.index("]")]
            return parse_input(body, InputFormat.COMMA)[1]
        body = prompt[len(self.spec.prompt_prefix):]
        if self.spec.separator and body.endswith(self.spec.separator):
            body = body[:-len(self.spec.separator)]
        return parse_input(body.strip(), self.fmt)[1]

    def complete(self, prompt):
        concepts = self.concepts_from_prompt(prompt)
        if len(concepts) == 1:
            body = concepts[0]
        else:
            body = ", ".join(concepts[:-1]) + " and " + concepts[-1]
        tail = f"{self.spec.stop_sequence}unused continuation" if self.spec.stop_sequence else ""
        return f" A scene with {body}.{tail}"


class ReplayGenerator:
    """Answers prompts from a transcript written by TranscriptRecorder."""

    def __init__(self, path):
        self.completions = {}
        for _, record in read_jsonl(path):
            self.completions[record["prompt"]] = record["completion"]

    def complete(self, prompt):
        try:
            return self.completions[prompt]
        except KeyError:
            raise TransportError(f"Prompt not in replay transcript: {prompt!r}")


class TranscriptRecorder:

    def __init__(self, path, model=None):
        ensure_parent_dir(path)
        self.path = path
        self.model = model
        self.lock = threading.Lock()

    def record(self, prompt, completion):
        line = dump_json_line({"model": self.model, "prompt": prompt, "completion": completion})
        with self.lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")


def generate(spec, prompt, generator, limiter=None, recorder=None):
    """First completion for `prompt`, cut at the stop sequence and trimmed.

    Transient transport failures are retried with exponential backoff up to
    spec.max_retries times.
    """
    attempt_no = 0

    def attempt():
        nonlocal attempt_no
        attempt_no += 1
        if limiter is not None:
            limiter.acquire()
        started = time.perf_counter()
        try:
            return generator.complete(prompt)
        finally:
            logger.info("generation attempt %d took %.3fs", attempt_no,
                        time.perf_counter() - started)

    retrying = Retrying(
        retry=retry_if_exception_type(TransientTransportError),
        stop=stop_after_attempt(spec.max_retries + 1),
        wait=wait_exponential(multiplier=spec.backoff, max=spec.max_backoff),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    )
    raw = retrying(attempt)
    if recorder is not None:
        recorder.record(prompt, raw)
    text = truncate_completion(raw, spec.stop_sequence)
    if not text:
        raise EmptyGenerationError(f"Empty completion for prompt {prompt!r}")
    return text


def generate_batch(spec, prompts, generator, limiter=None, recorder=None):
    """Generate for {id: prompt}; returns {id: sentence} joined by id.

    Empty completions are kept as "" with a warning; other transport errors
    propagate.
    """
    limiter = limiter or TokenBucket(spec.requests_per_minute, capacity=spec.concurrency)

    def run(item):
        key, prompt = item
        try:
            return key, generate(spec, prompt, generator, limiter, recorder)
        except EmptyGenerationError:
            logger.warning("Empty generation for instance %s", key)
            return key, ""

    results = {}
    with ThreadPoolExecutor(max_workers=spec.concurrency) as pool:
        for key, text in tqdm(pool.map(run, prompts.items()), total=len(prompts),
                              desc="Generating", disable=not logger.isEnabledFor(logging.INFO)):
            results[key] = text
    return {key: results[key] for key in prompts}


def make_generator(kind, spec, fmt=InputFormat.SPACE, replay_path=None):
    if kind == "stub":
        return StubGenerator(spec, fmt)
    if kind == "http":
        return HttpGenerator(spec)
    if kind == "replay":
        if replay_path is None:
            raise ConfigError("Replay generation needs a transcript path")
        return ReplayGenerator(replay_path)
    raise ConfigError(f"Invalid generator {kind} - options are [stub, http, replay]")


def load_generator_spec(path):
    with open(path, encoding="utf-8") as f:
        return GeneratorSpec(**json.load(f))
