"""Static HTML heatmaps of explainer rankings on one verified instance.

One row per explainer: the first `top_k` ranks are colored with an
intensity that decreases linearly with the rank, the rank-1 token is
outlined, selected tokens are bold, and clearly relevant ones are
additionally underlined. A side list shows each explainer's top five
tokens, and the legend flags explainers whose top token is a
zero-contribution one.
"""
from __future__ import annotations

import html
from typing import Mapping

from .explainers import Ranking
from .harness import VerifiedInstance

__all__ = ["render_heatmap"]

_BASE_COLOR = "255, 140, 0"  # rgb of the rank-1 cell

_STYLE = """
body { font-family: sans-serif; margin: 1.5em; }
.tokens { line-height: 2.2; margin: 0.4em 0 1.2em 0; }
.tok { padding: 2px 4px; border-radius: 3px; margin-right: 2px; display: inline-block; }
.tok.selected { font-weight: bold; }
.tok.relevant { text-decoration: underline; }
.tok.top1 { outline: 2px solid #222; }
.explainer-name { font-weight: bold; margin-top: 1em; }
.topfive { color: #444; font-size: 0.9em; margin-left: 1em; }
.legend { border-top: 1px solid #ccc; margin-top: 1.5em; padding-top: 0.6em; font-size: 0.9em; }
.error { color: #b00020; font-weight: bold; }
table.layout { width: 100%; } td.side { vertical-align: top; width: 18em; }
"""


def _alpha(rank: int, top_k: int) -> float:
    # linear fade: 1.0 at rank 1 down to 1/top_k at rank top_k
    return (top_k - rank + 1) / top_k


def render_heatmap(
    v: VerifiedInstance, rankings: Mapping[str, Ranking], top_k: int = 10
) -> str:
    """Render one instance's rankings as a standalone HTML document."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    n = len(v.instance)
    for name, ranking in rankings.items():
        if len(ranking.order) != n:
            raise ValueError(f"ranking {name!r} does not cover instance {v.instance.id!r}")
    selected = v.partition.selected
    relevant = v.partition.sr
    non_selected = v.partition.n

    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'>",
        f"<!-- color scale: rgba({_BASE_COLOR}) alpha {1.0:.4f} at rank 1 -> "
        f"{_alpha(top_k, top_k):.4f} at rank {top_k}, linear -->",
        f"<title>rankings: {html.escape(v.instance.id)}</title>",
        f"<style>{_STYLE}</style></head><body>",
        f"<h2>instance {html.escape(v.instance.id)}</h2>",
        f"<p>prediction {v.prediction:.4f}, bias {v.bias_prediction:.4f}; "
        f"{len(relevant)} clearly relevant, {len(selected)} selected, "
        f"{len(non_selected)} non-selected of {n} tokens. "
        "Bold = selected, underlined = clearly relevant, outline = explainer's top token.</p>",
        "<table class='layout'><tr><td>",
    ]
    errors = []
    side_lists = []
    for name, ranking in rankings.items():
        rank_of = {pos: i + 1 for i, pos in enumerate(ranking.order)}
        parts.append(f"<div class='explainer-name'>{html.escape(name)}</div>")
        spans = []
        for pos, tok in enumerate(v.instance.tokens):
            rank = rank_of[pos]
            classes = ["tok"]
            style = ""
            if pos in selected:
                classes.append("selected")
            if pos in relevant:
                classes.append("relevant")
            if rank <= top_k:
                classes.append("colored")
                style = f"background: rgba({_BASE_COLOR}, {_alpha(rank, top_k):.4f});"
            if rank == 1:
                classes.append("top1")
            spans.append(
                f"<span class='{' '.join(classes)}' style='{style}' "
                f"title='rank {rank}'>{html.escape(tok)}</span>"
            )
        parts.append(f"<div class='tokens'>{''.join(spans)}</div>")
        top_five = ranking.order[:5]
        side_lists.append(
            f"<div class='explainer-name'>{html.escape(name)}</div><ol class='topfive'>"
            + "".join(
                f"<li>{html.escape(v.instance.tokens[p])} (pos {p})</li>" for p in top_five
            )
            + "</ol>"
        )
        if ranking.order[0] in non_selected:
            errors.append(name)
    parts.append("</td><td class='side'>")
    parts.extend(side_lists)
    parts.append("</td></tr></table>")
    parts.append("<div class='legend'>")
    if errors:
        for name in errors:
            parts.append(
                f"<div class='error'>{html.escape(name)}: top-ranked token is "
                "non-selected (zero contribution)</div>"
            )
    else:
        parts.append("<div>no explainer ranked a zero-contribution token first</div>")
    parts.append("</div></body></html>")
    return "\n".join(parts) + "\n"
