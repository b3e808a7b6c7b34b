# refdense/prompts.py
"""prompts.py
클래스 프롬프트와 텍스트 보고서 템플릿 정의 모듈.

Jinja2 템플릿을 사용하며, 엔티티/모션 클래스 문구 / 평가 보고서(per-frame mAP,
action-conditional 표) / ablation 비교표 렌더링에 대응하는 템플릿을 제공한다.
"""

from __future__ import annotations

from typing import Optional

from jinja2 import Environment

_env = Environment(trim_blocks=True, lstrip_blocks=True, keep_trailing_newline=True)


def pct(value: Optional[float]) -> str:
    """[0,1] 값을 소수 첫째 자리 백분율 문자열로. 없으면 '-'."""
    return "-" if value is None else f"{100.0 * value:.1f}"


_env.filters["pct"] = pct

# ─────────────────────────────────────────────────────────────
# 1. 클래스 프롬프트 (text table)
# ─────────────────────────────────────────────────────────────
PROMPT_CLASS = _env.from_string("a photo of {{ phrase }}")

# ─────────────────────────────────────────────────────────────
# 2. 평가 보고서 (per-frame mAP + action-conditional)
# ─────────────────────────────────────────────────────────────
REPORT_EVAL = _env.from_string("""\
Dense action detection: {{ report.n_sequences }} sequences, {{ report.n_frames }} frames
────────────────────────────────────────────────────────────
per-frame mAP(%) : {{ report.mAP | pct }}   (scored {{ report.per_class_ap | select("ne", None) | list | length }} classes, skipped {{ report.skipped_classes }})

{% for block in report.conditional %}
τ = {{ "%-3d" | format(block.tau) }}  mAP_ac {{ "%6s" | format(block.mAP_ac | pct) }}  F1_ac {{ "%6s" | format(block.F1_ac | pct) }}  P_ac {{ "%6s" | format(block.P_ac | pct) }}  R_ac {{ "%6s" | format(block.R_ac | pct) }}   pairs {{ block.n_pairs }} (skipped {{ block.skipped_pairs }}){% if block.empty %} [empty]{% endif %}

{% endfor %}
""")

# ─────────────────────────────────────────────────────────────
# 3. ablation 비교표 (full − ablated 델타)
# ─────────────────────────────────────────────────────────────
REPORT_ABLATION = _env.from_string("""\
Ablation battery: {{ seeds | length }} seeds {{ seeds }}, τ ∈ {{ windows }}
{{ "%-22s" | format("variant") }}{% for col in columns %}{{ "%-24s" | format(col) }}{% endfor %}

{% for row in rows %}
{{ "%-22s" | format(row.name) }}{% for cell in row.cells %}{{ "%-24s" | format(cell) }}{% endfor %}

{% endfor %}
{% if violations %}
Directionality violations:
{% for v in violations %}
  - {{ v }}
{% endfor %}
{% else %}
Directionality checks: all passed
{% endif %}
{% if failures %}
Failed runs:
{% for f in failures %}
  - {{ f }}
{% endfor %}
{% endif %}
""")


def class_prompt(phrase: str) -> str:
    """``'a photo of <phrase>'`` 문장을 만든다."""
    return PROMPT_CLASS.render(phrase=phrase)
