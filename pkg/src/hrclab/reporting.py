"""Result files: per-episode reward curves, validation action traces, the
per-case metrics table, and the three-factor category summary.

All files are plain CSV/JSON with fixed headers and shortest round-trip
decimal floats, so re-exporting identical records yields identical bytes.
"""

from __future__ import annotations

import json
import os

from .curriculum import CaseMetrics, CaseRunResult, three_factor_summary
from .errors import ConfigError

EPISODE_REWARDS_HEADER = "seed,stage,episode,reward"
VALIDATION_TRACE_HEADER = "seed,step,t,robot_action,partner_action,C_x,P_z,B_y"
METRICS_HEADER = ("case,human_involved_episodes,total_episodes,involvement,"
                  "error_translation,error_rotation,error_ball,error_total,"
                  "converged,wall_time_s")


def _fmt(v: float) -> str:
    return repr(float(v))


def export_metrics(results: dict[int, CaseRunResult], out_dir: str) -> list[str]:
    """Write every result file for the given cases; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for case_id in sorted(results):
        res = results[case_id]
        paths.append(_write_episode_rewards(res, out_dir))
        paths.append(_write_validation_traces(res, out_dir))
    paths.append(write_metrics_csv(
        {cid: res.aggregate for cid, res in results.items()},
        os.path.join(out_dir, "metrics_summary.csv")))
    if set(results) == {1, 2, 3, 4, 5, 6}:
        summary = three_factor_summary({cid: r.aggregate for cid, r in results.items()})
        path = os.path.join(out_dir, "three_factor_summary.json")
        _write_text(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
        paths.append(path)
    return paths


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def _write_episode_rewards(res: CaseRunResult, out_dir: str) -> str:
    lines = [EPISODE_REWARDS_HEADER]
    for sr in res.seed_results:
        for stage_idx, stage in enumerate(sr.stage_results, start=1):
            for ep, reward in enumerate(stage.episode_rewards, start=1):
                lines.append(f"{sr.seed},{stage_idx},{ep},{_fmt(reward)}")
    path = os.path.join(out_dir, f"case{res.case_id}_episode_rewards.csv")
    _write_text(path, "\n".join(lines) + "\n")
    return path


def _write_validation_traces(res: CaseRunResult, out_dir: str) -> str:
    lines = [VALIDATION_TRACE_HEADER]
    for sr in res.seed_results:
        tr = sr.validation_trace
        for k in range(len(tr.robot_levels)):
            s = tr.states[k + 1]
            lines.append(",".join([
                str(sr.seed), str(k), _fmt(s.t),
                _fmt(tr.robot_levels[k]), _fmt(tr.partner_actions[k]),
                _fmt(s.C_x), _fmt(s.P_z), _fmt(s.B_y),
            ]))
    path = os.path.join(out_dir, f"case{res.case_id}_validation_trace.csv")
    _write_text(path, "\n".join(lines) + "\n")
    return path


def write_metrics_csv(metrics_by_case: dict[int, CaseMetrics], path: str) -> str:
    lines = [METRICS_HEADER]
    for cid in sorted(metrics_by_case):
        m = metrics_by_case[cid]
        lines.append(",".join([
            str(cid),
            _fmt(m.human_involved_episodes), _fmt(m.total_episodes), _fmt(m.involvement),
            _fmt(m.error_translation), _fmt(m.error_rotation), _fmt(m.error_ball),
            _fmt(m.error_total),
            "true" if m.converged else "false",
            _fmt(m.wall_time),
        ]))
    _write_text(path, "\n".join(lines) + "\n")
    return path


def load_metrics_csv(path: str) -> dict[int, CaseMetrics]:
    """Inverse of write_metrics_csv (exact float round trip)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ConfigError(f"{path}: missing or wrong metrics header")
    out: dict[int, CaseMetrics] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 10:
            raise ConfigError(f"{path}:{lineno}: expected 10 fields, got {len(parts)}")
        try:
            cid = int(parts[0])
            out[cid] = CaseMetrics(
                case_id=cid,
                human_involved_episodes=float(parts[1]),
                total_episodes=float(parts[2]),
                involvement=float(parts[3]),
                error_translation=float(parts[4]),
                error_rotation=float(parts[5]),
                error_ball=float(parts[6]),
                error_total=float(parts[7]),
                converged={"true": True, "false": False}[parts[8]],
                wall_time=float(parts[9]),
            )
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad metrics row: {exc}") from exc
    return out
