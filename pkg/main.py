"""ヒープ活性解析器 heaplive — メインオーケストレーター"""

import argparse
import json
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from access_pattern import PatternError, parse_pattern, render_pattern
from automata import (
    PointAutomaton,
    QueryError,
    accepts,
    build_point_automata,
    language_upto,
    lookup_automaton,
    to_dot,
)
from config import Config
from deep_stack import deep_stack
from frontend import Program, ProgramError, load_program, main_points, scopes_at_points
from nullify import Candidate, format_candidates, nullification_candidates
from oracle import (
    EvaluationError,
    SoundnessReport,
    Trace,
    check_soundness,
    evaluate_program,
    format_trace,
    render_value,
)
from solver import (
    Grammar,
    Nonterminal,
    build_grammar,
    decompose_equations,
    eliminate_useless_nonterminals,
    format_grammar,
)
from symbolic import AnnotationStore, format_env
from transfer import XfEquationSet, analyze_program, format_equations


# --dump-language の K を省略したとき
_FROM_CONFIG = object()


def _status(message: str) -> None:
    print(message, file=sys.stderr)


def _detail(message: str) -> None:
    if Config.VERBOSE:
        print(f"   {message}", file=sys.stderr)


@dataclass
class RunConfig:
    """1回の実行で行う処理の指定。"""

    input_path: str
    dump_equations: bool = False
    dump_grammar: bool = False
    dump_annotations: bool = False
    emit_dot: str | None = None
    queries: list[str] = field(default_factory=list)
    nullify_report: bool = False
    depth: int = 3
    trace: bool = False
    verify: bool = False
    dump_language: int | None = None
    json_out: str | None = None

    def has_action(self) -> bool:
        return any(
            (
                self.dump_equations,
                self.dump_grammar,
                self.dump_annotations,
                self.emit_dot,
                self.queries,
                self.nullify_report,
                self.trace,
                self.verify,
                self.dump_language is not None,
                self.json_out,
            )
        )


@dataclass
class AnalysisReport:
    """解析の全段階の結果。"""

    program: Program
    equations: XfEquationSet
    store: AnnotationStore
    grammar: Grammar
    automata: dict[Nonterminal, PointAutomaton]
    scopes: dict[int, tuple[str, ...]]
    candidates: list[Candidate] = field(default_factory=list)
    soundness: SoundnessReport | None = None
    trace: Trace | None = None
    result: str | None = None

    def automaton(self, point: int, var: str) -> PointAutomaton:
        return lookup_automaton(self.automata, point, var)

    def to_dict(self) -> dict:
        points = []
        for point, variables in sorted(self.scopes.items()):
            summaries = []
            for var in variables:
                final = self.automaton(point, var).final
                summaries.append(
                    {
                        "name": var,
                        "states": len(final.states),
                        "edges": len(final.edges),
                        "finals": len(final.finals),
                    }
                )
            points.append({"pi": point, "vars": summaries})
        return {
            "points": points,
            "equations": format_equations(self.equations).splitlines(),
            "candidates": [c.to_dict() for c in self.candidates],
            "soundness": self.soundness.to_dict() if self.soundness is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"


@deep_stack
def analyze(program: Program) -> AnalysisReport:
    """XE/XF → 分解 → 文法 → 自動機械 までを実行する。

    Raises:
        AffineFormError: 方程式が Find ∪ Fdep·σ の形に分解できない場合。
    """
    equations, store = analyze_program(program)
    _status(f"✅ XF 方程式: {len(equations)} 本 / 注釈済みポイント: {len(store)} 個")

    constraints = decompose_equations(equations)
    points = main_points(program)
    all_scopes = scopes_at_points(program)
    scopes = {point: all_scopes[point] for point in points}
    grammar = eliminate_useless_nonterminals(build_grammar(constraints, store, points, scopes))
    _status(f"✅ 文法: 生成規則 {len(grammar.productions)} 個 / 開始記号 {len(grammar.starts)} 個")

    automata = build_point_automata(grammar)
    for start, built in automata.items():
        _detail(f"{start}: 状態 {len(built.final.states)} / 辺 {len(built.final.edges)} / 反復 {built.iterations}")
    _status(f"✅ 自動機械: {len(automata)} 個")
    return AnalysisReport(program, equations, store, grammar, automata, scopes)


def parse_query(text: str) -> tuple[int, str, str]:
    """"PI:VAR:PATTERN" 形式のクエリを分解する。

    Raises:
        QueryError: 形式が不正な場合。
        PatternError: パターンが正規形でない場合。
    """
    parts = text.split(":", 2)
    if len(parts) != 3 or not parts[1]:
        raise QueryError(f"クエリは PI:VAR:PATTERN の形式で指定してください: {text!r}")
    try:
        point = int(parts[0])
    except ValueError:
        raise QueryError(f"プログラムポイントが整数ではありません: {parts[0]!r}") from None
    return point, parts[1], parse_pattern(parts[2], canonical_only=True)


def query_membership(report: AnalysisReport, point: int, var: str, pattern: str) -> str:
    """最終自動機械が pattern を受理すれば "LIVE"、しなければ "DEAD"。

    Raises:
        QueryError: (π, v) に対応する自動機械がない場合。
        PatternError: pattern が正規形でない場合。
    """
    return "LIVE" if accepts(report.automaton(point, var).final, pattern) else "DEAD"


@deep_stack
def verify(report: AnalysisReport) -> SoundnessReport:
    """参照インタプリタを実行し、動的な活性パスが静的結果に含まれるか調べる。

    Raises:
        EvaluationError: プログラムの実行時エラー。
    """
    value, trace = evaluate_program(report.program)
    report.trace = trace
    report.result = render_value(value, trace.heap)
    finals = {(nt.point, nt.var): built.final for nt, built in report.automata.items()}
    report.soundness = check_soundness(finals, trace, sorted(report.scopes))
    return report.soundness


def _format_language(report: AnalysisReport, bound: int) -> str:
    lines = []
    for start, built in report.automata.items():
        words = sorted(language_upto(built.final, bound, alphabet="01"), key=lambda w: (len(w), w))
        rendered = ", ".join(render_pattern(w) for w in words) if words else "∅"
        lines.append(f"p{start.point} {start.var}: {rendered}")
    return "\n".join(lines)


def _emit_dot(report: AnalysisReport, directory: str) -> int:
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    for start, built in report.automata.items():
        path = out_dir / f"p{start.point}_{start.var}.dot"
        path.write_text(to_dot(built.final, name=str(start)), encoding="utf-8")
    return len(report.automata)


@deep_stack
def run_pipeline(cfg: RunConfig) -> tuple[AnalysisReport, int]:
    """入力ファイルを解析し、指定された出力を行う。

    データ（ダンプ・LIVE/DEAD・候補）は標準出力、状態表示は標準エラー出力に書く。

    Args:
        cfg: 実行設定。

    Returns:
        (解析結果, 終了コード)。健全性検査で違反があれば終了コードは 1。

    Raises:
        OSError: 入力ファイルが読めない場合。
        ProgramError: 入力プログラムの誤り。
        QueryError / PatternError: 不正なクエリ。
        EvaluationError: --verify 実行時のプログラムの実行時エラー。
    """
    _status(f"\n{'═' * 50}")
    _status(f"🔍 解析開始: {cfg.input_path}")
    _status(f"{'═' * 50}")

    program = load_program(cfg.input_path)
    _status(f"✅ 構文解析・検証: 関数 {len(program.definitions)} 個")
    report = analyze(program)

    if cfg.dump_equations:
        print(format_equations(report.equations))
    if cfg.dump_annotations:
        for point, env in report.store.items():
            print(f"p{point}: {format_env(env)}")
    if cfg.dump_grammar:
        print(format_grammar(report.grammar))
    if cfg.dump_language is not None:
        print(_format_language(report, cfg.dump_language))

    for text in cfg.queries:
        point, var, pattern = parse_query(text)
        print(query_membership(report, point, var, pattern))

    if cfg.nullify_report or cfg.json_out:
        for point in sorted(report.scopes):
            report.candidates.extend(nullification_candidates(report.automata, report.scopes, point, cfg.depth))
        if cfg.nullify_report:
            print(format_candidates(report.candidates))
            _status(f"⚠️ ヌル化候補 {len(report.candidates)} 件（安全性は未検査です）")

    exit_code = 0
    if cfg.verify or cfg.trace:
        _status("🔍 参照インタプリタで実行中...")
        soundness = verify(report)
        _status(f"✅ 実行結果: {report.result}")
        if cfg.trace:
            print(format_trace(report.trace))
        if cfg.verify:
            _status(
                f"📊 健全性検査: ポイント {len(soundness.checked_points)} 個 / "
                f"パス {soundness.checked_paths} 本 / 違反 {len(soundness.violations)} 件"
            )
            for violation in soundness.violations:
                _status(f"❌ 静的結果に含まれない動的活性パス: {violation}")
            if not soundness.ok:
                exit_code = 1

    if cfg.emit_dot:
        count = _emit_dot(report, cfg.emit_dot)
        _status(f"✅ DOT ファイル {count} 個を {cfg.emit_dot} に出力しました")
    if cfg.json_out:
        Path(cfg.json_out).write_text(report.to_json(), encoding="utf-8")
        _status(f"✅ JSON レポートを {cfg.json_out} に出力しました")

    _status(f"\n{'═' * 50}")
    _status("🎉 解析完了!" if exit_code == 0 else "⚠️ 健全性検査で違反が見つかりました")
    _status(f"{'═' * 50}")
    return report, exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="一階正格関数型言語のヒープ活性解析器 (heaplive)",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用例:
  # XF 方程式と文法を表示
  python main.py tests/programs/append.hl --dump-equations --dump-grammar

  # ポイント 29 で w.10 が活性か問い合わせる
  python main.py tests/programs/append.hl --query 29:w:10

  # ヌル化候補（深さ 2）と自動機械の DOT を出力
  python main.py tests/programs/append.hl --nullify-report --depth 2 --emit-dot out/

  # 参照インタプリタで健全性を検査し、JSON レポートを書く
  python main.py tests/programs/append.hl --verify --json-out report.json
        """,
    )
    parser.add_argument("input", type=str, help="解析するプログラムのファイル")
    parser.add_argument("--dump-equations", action="store_true", help="XF 方程式を表示")
    parser.add_argument("--dump-annotations", action="store_true", help="各ポイントの記号的活性環境を表示")
    parser.add_argument("--dump-grammar", action="store_true", help="不要記号除去後の文法を表示")
    parser.add_argument(
        "--dump-language",
        type=int,
        nargs="?",
        const=_FROM_CONFIG,
        metavar="K",
        help="各ポイントの最終自動機械が受理する長さ K 以下の文字列を表示（省略時: HEAPLIVE_ENUM_BOUND）",
    )
    parser.add_argument("--emit-dot", type=str, metavar="DIR", help="最終自動機械を DIR/p{π}_{v}.dot に出力")
    parser.add_argument(
        "--query",
        action="append",
        default=[],
        metavar="PI:VAR:PATTERN",
        help="アクセスパスの活性を問い合わせる（複数指定可能、結果は LIVE / DEAD）",
    )
    parser.add_argument("--nullify-report", action="store_true", help="ヌル化候補を表示")
    parser.add_argument(
        "--depth",
        type=int,
        default=None,
        help="ヌル化候補のパターンの最大長（デフォルト: HEAPLIVE_NULLIFY_DEPTH）",
    )
    parser.add_argument("--trace", action="store_true", help="参照インタプリタのイベント列を表示")
    parser.add_argument("--verify", action="store_true", help="参照インタプリタで健全性を検査")
    parser.add_argument("--json-out", type=str, metavar="PATH", help="JSON レポートの出力先")
    return parser


def main(argv: list[str] | None = None):
    """CLIエントリーポイント"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not Config.validate():
        sys.exit(2)

    depth = args.depth if args.depth is not None else Config.int_setting("NULLIFY_DEPTH")
    if args.dump_language is _FROM_CONFIG:
        args.dump_language = Config.int_setting("ENUM_BOUND")
    if depth < 0:
        parser.error("--depth は 0 以上で指定してください")
    if args.dump_language is not None and args.dump_language < 0:
        parser.error("--dump-language は 0 以上で指定してください")

    cfg = RunConfig(
        input_path=args.input,
        dump_equations=args.dump_equations,
        dump_grammar=args.dump_grammar,
        dump_annotations=args.dump_annotations,
        emit_dot=args.emit_dot,
        queries=args.query,
        nullify_report=args.nullify_report,
        depth=depth,
        trace=args.trace,
        verify=args.verify,
        dump_language=args.dump_language,
        json_out=args.json_out,
    )
    if not cfg.has_action():
        parser.error("出力する内容（--dump-equations, --query, --verify など）を1つ以上指定してください")

    try:
        _, exit_code = run_pipeline(cfg)
        sys.exit(exit_code)
    except KeyboardInterrupt:
        _status("\n\n⚠️ 処理を中断しました")
        sys.exit(130)
    except (ProgramError, QueryError, PatternError) as e:
        _status(f"❌ {cfg.input_path}: {e}")
        sys.exit(2)
    except (OSError, UnicodeDecodeError) as e:
        _status(f"❌ 入力ファイルを読み込めません: {e}")
        sys.exit(2)
    except EvaluationError as e:
        _status(f"❌ 実行時エラー: {e}")
        sys.exit(1)
    except RecursionError:
        _status("❌ 式の入れ子が深すぎます")
        _status("💡 HEAPLIVE_RECURSION_LIMIT を大きくして再実行してください")
        sys.exit(1)
    except Exception as e:
        _status(f"\n❌ 予期しないエラーが発生しました: {e}")
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
