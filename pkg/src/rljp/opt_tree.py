"""Weighted rule-optimization tree and its best-first refinement loop.

Nodes are rule versions; a node's weight is its quiz score, memoized so a
rule is never re-evaluated. Each iteration evaluates whatever is new, stops
once the best weight reaches the threshold or the iteration cap, and
otherwise expands the current best node with one refined child. The max
pointer moves only on strict improvement, so the first achiever of a weight
survives ties.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .agents import Backend, Transcript
from .fol import Consequent, FolRule, Provenance, consequent_key, parse_rule
from .quiz import (
    QuizQuestion,
    QuizResult,
    ReasoningRecord,
    build_quiz_result,
    run_quiz,
)

logger = logging.getLogger(__name__)

DEFINED_SCORE_DEFAULT = 0.9
MAX_ITERATIONS_DEFAULT = 5

# rewrite callback: (rule, its quiz result, child rule id) -> child rule
RewriteFn = Callable[[FolRule, QuizResult, str], FolRule]


class TreeError(RuntimeError):
    pass


@dataclass
class RuleNode:
    node_id: str
    rule: FolRule
    parent: Optional[str] = None
    children: list[str] = field(default_factory=list)
    weight: Optional[float] = None
    eval: Optional[QuizResult] = None


@dataclass
class OptimizationTree:
    target: Consequent
    nodes: dict[str, RuleNode]
    root_id: str
    max_score: float = 0.0
    max_pointer: Optional[str] = None
    iteration: int = 0
    _sequence: int = 0

    def node(self, node_id: str) -> RuleNode:
        if node_id not in self.nodes:
            raise TreeError(f"unknown node {node_id}")
        return self.nodes[node_id]

    def unevaluated(self) -> list[str]:
        return [nid for nid, node in self.nodes.items() if node.eval is None]

    def next_node_id(self, version: int) -> str:
        node_id = f"{consequent_key(self.target)}/{version}/{self._sequence}"
        self._sequence += 1
        return node_id


def new_tree(initial: FolRule) -> OptimizationTree:
    """A tree holding just the (unevaluated) initial rule."""
    tree = OptimizationTree(target=initial.target, nodes={}, root_id="")
    root_id = tree.next_node_id(initial.version)
    tree.nodes[root_id] = RuleNode(node_id=root_id, rule=initial)
    tree.root_id = root_id
    return tree


def evaluate_node(
    tree: OptimizationTree,
    node_id: str,
    questions: Sequence[QuizQuestion],
    agent: Backend,
    *,
    transcript: Optional[Transcript] = None,
    concurrency: int = 1,
) -> float:
    """Quiz the node's rule (memoized) and install its weight.

    A cached node costs zero agent calls. The max pointer advances only on
    weight > max_score.
    """
    node = tree.node(node_id)
    if node.eval is not None:
        assert node.weight is not None
        return node.weight
    result = run_quiz(
        node.rule,
        questions,
        agent,
        tag_prefix=f"quiz/{node_id}",
        transcript=transcript,
        concurrency=concurrency,
    )
    node.eval = result
    node.weight = result.score
    if result.score > tree.max_score or tree.max_pointer is None:
        tree.max_score = result.score
        tree.max_pointer = node_id
    return result.score


def select_best(tree: OptimizationTree) -> str:
    """The max-pointer node (earliest achiever among equal weights)."""
    if tree.max_pointer is None:
        raise TreeError("no evaluated nodes")
    return tree.max_pointer


def expand(
    tree: OptimizationTree,
    node_id: str,
    rewrite: RewriteFn,
) -> Optional[str]:
    """Attach one refined child under an evaluated node.

    Returns the child's id, or None when the rewrite fails (the tree is left
    unchanged; the caller still counts the iteration).
    """
    node = tree.node(node_id)
    if node.eval is None:
        raise TreeError(f"cannot expand unevaluated node {node_id}")
    child_id = tree.next_node_id(node.rule.version + 1)
    try:
        child_rule = rewrite(node.rule, node.eval, child_id)
    except Exception as exc:
        logger.warning("expansion of %s failed: %s", node_id, exc)
        return None
    child = RuleNode(node_id=child_id, rule=child_rule, parent=node_id)
    tree.nodes[child_id] = child
    node.children.append(child_id)
    return child_id


def optimize(
    tree: OptimizationTree,
    questions: Sequence[QuizQuestion],
    agent: Backend,
    *,
    rewrite: RewriteFn,
    defined_score: float = DEFINED_SCORE_DEFAULT,
    max_iterations: int = MAX_ITERATIONS_DEFAULT,
    transcript: Optional[Transcript] = None,
    concurrency: int = 1,
    store_path: Optional[str | Path] = None,
) -> FolRule:
    """Run the refinement loop and return the best rule found.

    Per iteration: evaluate every unevaluated node, stop when max_score >=
    defined_score or the iteration cap is reached, otherwise expand the best
    node. A failed expansion still consumes an iteration so the loop always
    terminates. The tree is persisted after every iteration when store_path
    is given.
    """
    if not questions:
        raise ValueError("questions must be non-empty")
    if not tree.nodes:
        raise TreeError("tree has no root")
    failures = 0
    while True:
        for node_id in tree.unevaluated():
            evaluate_node(
                tree,
                node_id,
                questions,
                agent,
                transcript=transcript,
                concurrency=concurrency,
            )
        if store_path is not None:
            save_tree(tree, store_path)
        if tree.max_score >= defined_score:
            break
        if tree.iteration >= max_iterations:
            break
        child_id = expand(tree, select_best(tree), rewrite)
        if child_id is None:
            failures += 1
        tree.iteration += 1
        if store_path is not None:
            save_tree(tree, store_path)
    if failures and tree.max_score < defined_score:
        logger.warning(
            "optimization for %s ended with %d failed expansions; returning current best",
            consequent_key(tree.target),
            failures,
        )
    best = tree.node(select_best(tree))
    return best.rule


# ---------------------------------------------------------------------------
# Persistence
#
# The store keeps, per node, the rendered rule text plus outcome counts and
# the per-question reasoning records; records let a resumed run expand the
# best node without re-issuing a single quiz call.


def save_tree(tree: OptimizationTree, path: str | Path) -> None:
    from .fol import render_rule

    payload = {
        "target": consequent_key(tree.target),
        "nodes": [
            {
                "node_id": node.node_id,
                "parent": node.parent,
                "rule_text": render_rule(node.rule),
                "rule_id": node.rule.rule_id,
                "provenance": {
                    "kind": node.rule.provenance.kind,
                    "parent_rule_id": node.rule.provenance.parent_rule_id,
                },
                "version": node.rule.version,
                "weight": node.weight,
                "tp": node.eval.tp if node.eval else None,
                "tn": node.eval.tn if node.eval else None,
                "fp": node.eval.fp if node.eval else None,
                "fn": node.eval.fn if node.eval else None,
                "records": [
                    {
                        "case_id": r.question.case_id,
                        "correct_letter": r.correct_letter,
                        "predicted_letter": r.predicted_letter,
                        "outcome": r.outcome,
                        "malformed": r.malformed,
                        "reasoning": r.reasoning_text,
                    }
                    for r in (node.eval.records if node.eval else ())
                ],
            }
            for node in tree.nodes.values()
        ],
        "max_pointer": tree.max_pointer,
        "max_score": tree.max_score,
        "iteration": tree.iteration,
        "sequence": tree._sequence,
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def load_tree(
    path: str | Path,
    target: Consequent,
    questions: Sequence[QuizQuestion],
) -> OptimizationTree:
    """Rehydrate a persisted tree; `questions` must be the same quiz the run
    was using (records are re-joined to questions by case_id)."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload["target"] != consequent_key(target):
        raise TreeError(
            f"tree store {path} is for {payload['target']}, not {consequent_key(target)}"
        )
    question_by_case = {q.case_id: q for q in questions}
    tree = OptimizationTree(
        target=target,
        nodes={},
        root_id="",
        max_score=payload["max_score"],
        max_pointer=payload["max_pointer"],
        iteration=payload["iteration"],
        _sequence=payload["sequence"],
    )
    for entry in payload["nodes"]:
        provenance = Provenance(
            entry["provenance"]["kind"], entry["provenance"]["parent_rule_id"]
        )
        rule = parse_rule(
            entry["rule_text"],
            rule_id=entry["rule_id"],
            version=entry["version"],
            provenance=provenance,
        )
        node = RuleNode(
            node_id=entry["node_id"], rule=rule, parent=entry["parent"]
        )
        if entry["weight"] is not None:
            records = []
            for row in entry["records"]:
                question = question_by_case.get(row["case_id"])
                if question is None:
                    raise TreeError(
                        f"tree store {path} references unknown case {row['case_id']}"
                    )
                records.append(
                    ReasoningRecord(
                        question=question,
                        reasoning_text=row["reasoning"],
                        correct_letter=row["correct_letter"],
                        predicted_letter=row["predicted_letter"],
                        outcome=row["outcome"],
                        malformed=row["malformed"],
                    )
                )
            node.eval = build_quiz_result(records)
            node.weight = entry["weight"]
        tree.nodes[node.node_id] = node
        if node.parent is not None:
            tree.nodes[node.parent].children.append(node.node_id)
    tree.root_id = payload["nodes"][0]["node_id"]
    return tree
