"""Resumable pipeline: nine stages from raw cases to a metrics report.

Every stage reads and writes plain files under the run directory and records
its input hash plus output hashes in the manifest. On rerun a stage is
skipped exactly when its recorded input hash still matches and all of its
outputs are present with their recorded hashes; an output whose bytes
changed behind the manifest's back is a checksum failure, not a silent
rebuild.
"""

from __future__ import annotations

import datetime as _dt
import functools
import hashlib
import json
import logging
import time
import uuid
from pathlib import Path
from typing import Callable, Optional

from . import cacl as cacl_mod
from . import opt_tree
from .agents import Transcript
from .candidates import CharNgramPerceptron
from .config import build_agent, build_embedder
from .confusable import (
    ConfusableSet,
    build_confusable_set_from_embeddings,
    embed_cases,
)
from .corpus import (
    DatasetSplit,
    Judgment,
    LabelSpace,
    LegalCase,
    RejectedLine,
    group_precedents,
    label_space,
    load_cases,
    load_label_space,
    split_dataset,
    write_rejects_report,
)
from .examination import examine_case
from .fol import (
    ArticleCharge,
    ArticleTerm,
    Consequent,
    FolRule,
    consequent_key,
    parse_rule,
    render_rule,
    Provenance,
)
from .metrics import compute_metrics, report_as_json, report_as_table
from .quiz import make_quiz
from .rule_init import RuleSet, init_all_rules

logger = logging.getLogger(__name__)

STAGES = (
    "ingest",
    "split",
    "group-precedents",
    "init-rules",
    "build-confusable",
    "optimize",
    "train-candidates",
    "examine",
    "evaluate",
)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"stage {stage}: {message}")


class ChecksumError(StageError):
    pass


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class PipelineRun:
    """Holds the run directory, manifest, providers, and stage bookkeeping."""

    def __init__(
        self,
        config: dict,
        run_dir: str | Path,
        *,
        mock: bool = False,
        resume: bool = False,
    ):
        self.config = config
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        (self.run_dir / "trees").mkdir(exist_ok=True)
        self.mock = mock
        self.manifest_path = self.run_dir / "manifest.json"
        if self.manifest_path.exists():
            if not resume:
                raise FileExistsError(
                    f"{self.manifest_path} exists; pass --resume or use a fresh --run-dir"
                )
            self.manifest = json.loads(self.manifest_path.read_text(encoding="utf-8"))
            self.manifest["config"] = config
            self.manifest["seed"] = config["seed"]
        else:
            self.manifest = {
                "run_id": uuid.uuid4().hex,
                "created_at": _now(),
                "config": config,
                "seed": config["seed"],
                "providers": {},
                "stages": {},
                "agent_calls": 0,
                "usage": {"input_units": 0, "output_units": 0},
                "artifacts": [],
            }
        self._agents: dict[str, object] = {}
        self.agent = self._agent_for(None)
        self.embedder = build_embedder(config, mock=mock)
        routed = {
            stage: getattr(self._agent_for(stage), "name", "?")
            for stage in config["providers"]["routing"]
        }
        self.manifest["providers"] = {
            "agent": getattr(self.agent, "name", "?"),
            "embedder": getattr(self.embedder, "name", "?"),
            **({"routing": routed} if routed else {}),
        }
        self.transcript = Transcript(self.run_dir / "transcript.jsonl")

    def _agent_for(self, stage: Optional[str]):
        """Stage-routed agent backend; one instance per distinct spec."""
        spec = self.config["providers"]["agent"]
        if stage is not None:
            spec = self.config["providers"]["routing"].get(stage, spec)
        key = json.dumps(spec, sort_keys=True)
        if key not in self._agents:
            self._agents[key] = build_agent(self.config, mock=self.mock, stage=stage)
        return self._agents[key]

    # -- paths

    def path(self, name: str) -> Path:
        return self.run_dir / name

    def tree_path(self, target_key: str) -> Path:
        safe = "".join(c if c.isalnum() or c in "=,_-" else "-" for c in target_key)
        return self.run_dir / "trees" / f"{safe}.json"

    # -- manifest helpers

    def _count_transcript_lines(self) -> int:
        path = self.run_dir / "transcript.jsonl"
        if not path.exists():
            return 0
        with path.open("r", encoding="utf-8") as handle:
            return sum(1 for _ in handle)

    def _save_manifest(self) -> None:
        self.manifest["agent_calls"] = self._count_transcript_lines()
        usage = {"input_units": 0, "output_units": 0}
        for entry in self.transcript.entries:
            usage["input_units"] += entry.get("input_units", 0)
            usage["output_units"] += entry.get("output_units", 0)
        self.manifest["usage"] = usage
        self.manifest_path.write_text(
            json.dumps(self.manifest, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    def _stage_input_hash(self, inputs: list[Path], config_sections: list[str]) -> str:
        digest = hashlib.sha256()
        digest.update(str(self.config["seed"]).encode())
        for section in config_sections:
            digest.update(
                json.dumps(self.config.get(section), sort_keys=True).encode()
            )
        for path in inputs:
            digest.update(path.name.encode())
            digest.update(_sha256(path).encode())
        return digest.hexdigest()

    def _execute(
        self,
        name: str,
        inputs: list[Path],
        config_sections: list[str],
        outputs: Callable[[], list[Path]],
        body: Callable[[], None],
    ) -> None:
        for path in inputs:
            if not path.exists():
                raise StageError(name, f"missing input artifact {path}")
        input_hash = self._stage_input_hash(inputs, config_sections)
        recorded = self.manifest["stages"].get(name)
        if recorded and recorded.get("status") == "ok" and recorded.get("input_hash") == input_hash:
            missing = [p for p in recorded["outputs"] if not Path(p).exists()]
            if not missing:
                for path_str, digest in recorded["outputs"].items():
                    actual = _sha256(Path(path_str))
                    if actual != digest:
                        raise ChecksumError(
                            name, f"artifact {path_str} does not match its recorded checksum"
                        )
                logger.info("stage %s: up to date, skipped", name)
                recorded["skipped"] = True
                self._save_manifest()
                return
        entry = {
            "status": "running",
            "started_at": _now(),
            "input_hash": input_hash,
            "outputs": {},
            "skipped": False,
        }
        self.manifest["stages"][name] = entry
        self._save_manifest()
        logger.info("stage %s: running", name)
        started = time.monotonic()
        try:
            body()
        except Exception as exc:
            entry["status"] = "failed"
            entry["error"] = str(exc)
            entry["finished_at"] = _now()
            self._save_manifest()
            if isinstance(exc, StageError):
                raise
            raise StageError(name, str(exc)) from exc
        entry["outputs"] = {str(p): _sha256(p) for p in outputs()}
        for path_str in entry["outputs"]:
            if path_str not in self.manifest["artifacts"]:
                self.manifest["artifacts"].append(path_str)
        entry["status"] = "ok"
        entry["finished_at"] = _now()
        entry["elapsed_s"] = round(time.monotonic() - started, 3)
        self._save_manifest()

    # -- shared loading helpers (stages re-read artifacts rather than carry state)

    def _load_valid_cases(self) -> list[LegalCase]:
        return load_cases(self.path("cases.valid.jsonl"))

    def _load_labels(self) -> LabelSpace:
        labels_path = self.config["data"]["labels_path"]
        if labels_path:
            return load_label_space(labels_path)
        return label_space(self._load_valid_cases())

    def _load_split(self) -> DatasetSplit:
        payload = json.loads(self.path("split.json").read_text(encoding="utf-8"))
        by_id = {case.case_id: case for case in self._load_valid_cases()}
        return DatasetSplit(
            train=tuple(by_id[i] for i in payload["train"]),
            validation=tuple(by_id[i] for i in payload["validation"]),
            test=tuple(by_id[i] for i in payload["test"]),
        )

    def _load_ruleset(self, filename: str) -> RuleSet:
        payload = json.loads(self.path(filename).read_text(encoding="utf-8"))
        ruleset = RuleSet()
        for key in sorted(payload["rules"]):
            row = payload["rules"][key]
            provenance = Provenance(
                row["provenance"]["kind"], row["provenance"].get("parent_rule_id")
            )
            ruleset.rules[key] = parse_rule(
                row["rule_text"],
                rule_id=row["rule_id"],
                version=row["version"],
                provenance=provenance,
            )
        ruleset.failures = dict(payload.get("failures", {}))
        return ruleset

    def _dump_ruleset(self, ruleset: RuleSet, filename: str, *, weights=None) -> None:
        rows = {}
        for key in sorted(ruleset.rules):
            rule = ruleset.rules[key]
            rows[key] = {
                "target": key,
                "rule_id": rule.rule_id,
                "rule_text": render_rule(rule),
                "version": rule.version,
                "provenance": {
                    "kind": rule.provenance.kind,
                    "parent_rule_id": rule.provenance.parent_rule_id,
                },
                "created_at": self.manifest["created_at"],
            }
            if weights is not None and key in weights:
                rows[key]["weight"] = weights[key]
        payload = {"rules": rows, "failures": dict(sorted(ruleset.failures.items()))}
        self.path(filename).write_text(
            json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )

    def _targets(self) -> list[Consequent]:
        payload = json.loads(self.path("precedents.json").read_text(encoding="utf-8"))
        targets: list[Consequent] = []
        for key in sorted(payload["article+charge"]):
            article, charge = key.split("|", 1)
            targets.append(ArticleCharge(article, charge))
        for key in sorted(payload["article+prison_term"]):
            article, term = key.split("|", 1)
            targets.append(ArticleTerm(article, term))
        return targets

    def _precedent_groups(self) -> dict[tuple[str, str], list[LegalCase]]:
        payload = json.loads(self.path("precedents.json").read_text(encoding="utf-8"))
        by_id = {case.case_id: case for case in self._load_valid_cases()}
        groups: dict[tuple[str, str], list[LegalCase]] = {}
        for mode in ("article+charge", "article+prison_term"):
            for key, ids in payload[mode].items():
                article, second = key.split("|", 1)
                groups[(article, second)] = [by_id[i] for i in ids]
        return groups

    def _load_confusable(self, labels: LabelSpace) -> dict[str, ConfusableSet]:
        payload = json.loads(self.path("confusable.json").read_text(encoding="utf-8"))
        by_id = {case.case_id: case for case in self._load_valid_cases()}
        sets: dict[str, ConfusableSet] = {}
        for key, row in payload.items():
            target = _target_from_key(key)
            sets[key] = ConfusableSet(
                target=target,
                positives=tuple(by_id[i] for i in row["positive_ids"]),
                negatives=tuple(by_id[i] for i in row["negative_ids"]),
                negative_similarity=dict(row["similarity_of_each_negative"]),
            )
        return sets

    # ------------------------------------------------------------------
    # stages

    def stage_ingest(self) -> None:
        data = self.config["data"]
        source = Path(data["cases_path"])

        def body() -> None:
            rejects: list[RejectedLine] = []
            cases = load_cases(source, data["schema"], rejects=rejects)
            if not cases:
                raise ValueError("no valid cases ingested")
            with self.path("cases.valid.jsonl").open("w", encoding="utf-8") as handle:
                for case in cases:
                    row = {"case_id": case.case_id, "fact": case.fact_text}
                    if case.judgment:
                        row["meta"] = {
                            "relevant_articles": [case.judgment.article_id],
                            "accusation": [case.judgment.charge_id],
                            "term_bucket": [case.judgment.prison_term_bucket],
                        }
                    handle.write(json.dumps(row, ensure_ascii=False) + "\n")
            write_rejects_report(self.path("rejects.jsonl"), rejects)

        self._execute(
            "ingest",
            inputs=[source],
            config_sections=["data"],
            outputs=lambda: [self.path("cases.valid.jsonl"), self.path("rejects.jsonl")],
            body=body,
        )

    def stage_split(self) -> None:
        def body() -> None:
            cases = self._load_valid_cases()
            split = split_dataset(
                cases, tuple(self.config["data"]["ratios"]), self.config["seed"]
            )
            payload = {
                "train": [c.case_id for c in split.train],
                "validation": [c.case_id for c in split.validation],
                "test": [c.case_id for c in split.test],
            }
            self.path("split.json").write_text(
                json.dumps(payload, indent=2) + "\n", encoding="utf-8"
            )

        self._execute(
            "split",
            inputs=[self.path("cases.valid.jsonl")],
            config_sections=["data"],
            outputs=lambda: [self.path("split.json")],
            body=body,
        )

    def stage_group_precedents(self) -> None:
        def body() -> None:
            split = self._load_split()
            k = self.config["data"]["precedent_k"]
            payload = {}
            for mode in ("article+charge", "article+prison_term"):
                groups = group_precedents(split.train, mode, k)
                payload[mode] = {
                    f"{a}|{b}": [c.case_id for c in cases]
                    for (a, b), cases in sorted(groups.items())
                }
            self.path("precedents.json").write_text(
                json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
                encoding="utf-8",
            )

        self._execute(
            "group-precedents",
            inputs=[self.path("cases.valid.jsonl"), self.path("split.json")],
            config_sections=["data"],
            outputs=lambda: [self.path("precedents.json")],
            body=body,
        )

    def stage_init_rules(self) -> None:
        def body() -> None:
            labels = self._load_labels()
            groups = self._precedent_groups()
            targets = self._targets()
            ruleset = init_all_rules(
                groups,
                targets,
                self._agent_for("init-rules"),
                labels,
                transcript=self.transcript,
                temperature=self.config["optimization"]["temperature"],
                k=self.config["data"]["precedent_k"],
            )
            if not ruleset.rules:
                raise ValueError("rule initialization produced no rules")
            self._dump_ruleset(ruleset, "rules_init.json")

        self._execute(
            "init-rules",
            inputs=[self.path("cases.valid.jsonl"), self.path("precedents.json")],
            config_sections=["data", "optimization", "providers"],
            outputs=lambda: [self.path("rules_init.json")],
            body=body,
        )

    def stage_build_confusable(self) -> None:
        def body() -> None:
            split = self._load_split()
            train = list(split.train)
            embeddings = embed_cases(train, self.embedder)
            row_of = {case_id: i for i, case_id in enumerate(embeddings.case_ids)}
            num_config = self.config["optimization"]["num_negatives"]
            payload = {}
            for target in self._targets():
                key = consequent_key(target)
                positives = [c for c in train if _matches(c, target)]
                others = [c for c in train if not _matches(c, target)]
                if not positives or not others:
                    logger.warning("target %s has no positives or no others; skipped", key)
                    continue
                emb_pos = _slice_embeddings(embeddings, positives, row_of)
                emb_oth = _slice_embeddings(embeddings, others, row_of)
                num = num_config if num_config else len(positives)
                conf = build_confusable_set_from_embeddings(
                    emb_pos, emb_oth, positives, others, num, target=target
                )
                payload[key] = {
                    "target": key,
                    "positive_ids": [c.case_id for c in conf.positives],
                    "negative_ids": [c.case_id for c in conf.negatives],
                    "similarity_of_each_negative": {
                        case_id: round(sim, 12)
                        for case_id, sim in conf.negative_similarity.items()
                    },
                }
            if not payload:
                raise ValueError("no confusable sets could be built")
            self.path("confusable.json").write_text(
                json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
                encoding="utf-8",
            )

        self._execute(
            "build-confusable",
            inputs=[
                self.path("cases.valid.jsonl"),
                self.path("split.json"),
                self.path("precedents.json"),
            ],
            config_sections=["data", "optimization", "providers"],
            outputs=lambda: [self.path("confusable.json")],
            body=body,
        )

    def stage_optimize(self) -> None:
        tree_paths: list[Path] = []

        def body() -> None:
            labels = self._load_labels()
            init_rules = self._load_ruleset("rules_init.json")
            confusable_sets = self._load_confusable(labels)
            opt_config = self.config["optimization"]
            optimized = RuleSet()
            optimized.failures = dict(init_rules.failures)
            weights: dict[str, float] = {}
            for key in sorted(init_rules.rules):
                if key not in confusable_sets:
                    optimized.failures[key] = "no confusable set"
                    continue
                conf = confusable_sets[key]
                questions = make_quiz(
                    conf,
                    labels,
                    num_options=self.config["quiz"]["num_options"],
                    seed=self.config["seed"],
                    distractors_from_negatives=self.config["quiz"][
                        "distractors_from_negatives"
                    ],
                )
                store = self.tree_path(key)
                tree_paths.append(store)
                tree = None
                if store.exists():
                    # mid-stage resume; a store left by different inputs
                    # (changed seed or confusable set) just starts over
                    try:
                        tree = opt_tree.load_tree(store, conf.target, questions)
                        logger.info(
                            "resuming tree for %s at iteration %d", key, tree.iteration
                        )
                    except Exception as exc:
                        logger.warning(
                            "tree store %s not resumable (%s); rebuilding", store, exc
                        )
                if tree is None:
                    tree = opt_tree.new_tree(init_rules.rules[key])
                rewrite = functools.partial(
                    _cacl_rewrite,
                    agent=self._agent_for("optimize"),
                    labels=labels,
                    transcript=self.transcript,
                    tag_prefix=f"cacl/{key}",
                    temperature=opt_config["temperature"],
                    fact_truncate=opt_config["fact_truncate"],
                    max_records_per_side=opt_config["max_records_per_side"],
                )
                best = opt_tree.optimize(
                    tree,
                    questions,
                    self._agent_for("optimize"),
                    rewrite=rewrite,
                    defined_score=opt_config["defined_score"],
                    max_iterations=opt_config["max_iterations"],
                    transcript=self.transcript,
                    concurrency=self.config["agent_concurrency"],
                    store_path=store,
                )
                optimized.rules[key] = best
                weights[key] = tree.max_score
            if not optimized.rules:
                raise ValueError("optimization produced no rules")
            self._dump_ruleset(optimized, "rules_optimized.json", weights=weights)

        def outputs() -> list[Path]:
            return [self.path("rules_optimized.json")] + tree_paths

        self._execute(
            "optimize",
            inputs=[
                self.path("cases.valid.jsonl"),
                self.path("rules_init.json"),
                self.path("confusable.json"),
            ],
            config_sections=["quiz", "optimization", "providers"],
            outputs=outputs,
            body=body,
        )

    def stage_train_candidates(self) -> None:
        def body() -> None:
            labels = self._load_labels()
            split = self._load_split()
            exam = self.config["examination"]
            provider = CharNgramPerceptron(
                labels,
                ngram_sizes=tuple(exam["ngram_sizes"]),
                hash_dim=exam["hash_dim"],
                epochs=exam["epochs"],
            )
            provider.train(list(split.train))
            provider.save(self.path("candidates.json"))

        self._execute(
            "train-candidates",
            inputs=[self.path("cases.valid.jsonl"), self.path("split.json")],
            config_sections=["data", "examination"],
            outputs=lambda: [self.path("candidates.json")],
            body=body,
        )

    def stage_examine(self) -> None:
        def body() -> None:
            labels = self._load_labels()
            split = self._load_split()
            rules = self._load_ruleset("rules_optimized.json")
            provider = CharNgramPerceptron.load(self.path("candidates.json"))
            exam = self.config["examination"]
            with self.path("predictions.jsonl").open("w", encoding="utf-8") as handle:
                for case in split.test:
                    prediction = examine_case(
                        case.case_id,
                        case.fact_text,
                        rules,
                        provider,
                        labels,
                        self._agent_for("examine"),
                        seed=self.config["seed"],
                        candidate_k=exam["candidate_k"],
                        abstract_threshold=exam["abstract_threshold"],
                        transcript=self.transcript,
                    )
                    handle.write(
                        json.dumps(
                            {
                                "case_id": prediction.case_id,
                                "article": prediction.article_id,
                                "charge": prediction.charge_id,
                                "term": prediction.prison_term_bucket,
                                "used_fallback": prediction.used_fallback,
                                "used_abstract": prediction.used_abstract,
                                "rationale": prediction.rationale,
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )

        self._execute(
            "examine",
            inputs=[
                self.path("cases.valid.jsonl"),
                self.path("split.json"),
                self.path("rules_optimized.json"),
                self.path("candidates.json"),
            ],
            config_sections=["examination", "providers"],
            outputs=lambda: [self.path("predictions.jsonl")],
            body=body,
        )

    def stage_evaluate(self) -> None:
        def body() -> None:
            labels = self._load_labels()
            split = self._load_split()
            gold_by_id: dict[str, Judgment] = {
                case.case_id: case.judgment
                for case in split.test
                if case.judgment is not None
            }
            predictions = []
            pred_ids = []
            with self.path("predictions.jsonl").open("r", encoding="utf-8") as handle:
                for line in handle:
                    row = json.loads(line)
                    predictions.append(
                        {
                            "article": row["article"],
                            "charge": row["charge"],
                            "prison_term": row["term"],
                        }
                    )
                    pred_ids.append(row["case_id"])
            gold = [gold_by_id[i] for i in pred_ids]
            report = compute_metrics(
                predictions,
                gold,
                case_ids_predictions=pred_ids,
                case_ids_gold=pred_ids,
                labels=labels,
                macro_over_full_label_space=self.config["metrics"][
                    "macro_over_full_label_space"
                ],
            )
            self.path("metrics.json").write_text(report_as_json(report), encoding="utf-8")
            self.path("metrics.txt").write_text(report_as_table(report), encoding="utf-8")

        self._execute(
            "evaluate",
            inputs=[
                self.path("cases.valid.jsonl"),
                self.path("split.json"),
                self.path("predictions.jsonl"),
            ],
            config_sections=["metrics"],
            outputs=lambda: [self.path("metrics.json"), self.path("metrics.txt")],
            body=body,
        )

    # ------------------------------------------------------------------

    _STAGE_METHODS = {
        "ingest": stage_ingest,
        "split": stage_split,
        "group-precedents": stage_group_precedents,
        "init-rules": stage_init_rules,
        "build-confusable": stage_build_confusable,
        "optimize": stage_optimize,
        "train-candidates": stage_train_candidates,
        "examine": stage_examine,
        "evaluate": stage_evaluate,
    }

    def run_through(self, last_stage: str) -> dict:
        """Run the stage prefix ending at `last_stage`; returns the manifest."""
        if last_stage not in STAGES:
            raise ValueError(f"unknown stage {last_stage!r}")
        for name in STAGES:
            self._STAGE_METHODS[name](self)
            if name == last_stage:
                break
        self._save_manifest()
        return self.manifest


def run_pipeline(
    config: dict,
    run_dir: str | Path,
    *,
    mock: bool = False,
    resume: bool = False,
    last_stage: str = "evaluate",
) -> dict:
    """Execute the pipeline end to end (or up to `last_stage`)."""
    run = PipelineRun(config, run_dir, mock=mock, resume=resume)
    return run.run_through(last_stage)


# ---------------------------------------------------------------------------
# helpers


def _matches(case: LegalCase, target: Consequent) -> bool:
    if case.judgment is None:
        return False
    if isinstance(target, ArticleCharge):
        return (
            case.judgment.article_id == target.article_id
            and case.judgment.charge_id == target.charge_id
        )
    if isinstance(target, ArticleTerm):
        return (
            case.judgment.article_id == target.article_id
            and case.judgment.prison_term_bucket == target.prison_term_bucket
        )
    return case.judgment.article_id == target.article_id


def _target_from_key(key: str) -> Consequent:
    rule = parse_rule(f"FORALL x (P(x)) -> {_consequent_text_from_key(key)}")
    return rule.target


def _consequent_text_from_key(key: str) -> str:
    parts = dict(item.split("=", 1) for item in key.split(","))
    text = f"ARTICLE(\"{parts['article']}\")"
    if "charge" in parts:
        text += f" CHARGE(\"{parts['charge']}\")"
    if "term" in parts:
        text += f" TERM(\"{parts['term']}\")"
    return text


def _slice_embeddings(embeddings, cases, row_of):
    import numpy as np

    from .confusable import EmbeddingMatrix

    rows = np.stack([embeddings.vectors[row_of[c.case_id]] for c in cases])
    return EmbeddingMatrix(vectors=rows, case_ids=tuple(c.case_id for c in cases))


def _cacl_rewrite(
    rule: FolRule,
    result,
    child_rule_id: str,
    *,
    agent,
    labels,
    transcript,
    tag_prefix,
    temperature,
    fact_truncate,
    max_records_per_side,
) -> FolRule:
    return cacl_mod.optimize_rule(
        rule,
        result,
        agent,
        labels,
        child_rule_id=child_rule_id,
        tag_prefix=tag_prefix,
        transcript=transcript,
        temperature=temperature,
        fact_truncate=fact_truncate,
        max_records_per_side=max_records_per_side,
    )
