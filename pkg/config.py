"""環境変数の読み込みと設定管理"""

import os
import sys
from dotenv import load_dotenv

load_dotenv()


def _read(key: str, default: str) -> str:
    return os.getenv(key, default).strip()


class Config:
    """解析器の既定値を一元管理するクラス"""

    # テストでランダムな自動機械を生成するときの乱数シード
    SEED: str = _read("HEAPLIVE_SEED", "20090101")

    # ヌル化候補を調べるパターンの最大長
    NULLIFY_DEPTH: str = _read("HEAPLIVE_NULLIFY_DEPTH", "3")

    # 言語の有界列挙（--verify / --dump-language）に使う長さ
    ENUM_BOUND: str = _read("HEAPLIVE_ENUM_BOUND", "6")

    # 深い入れ子の式を解析・評価するときの再帰上限
    RECURSION_LIMIT: str = _read("HEAPLIVE_RECURSION_LIMIT", "200000")

    VERBOSE: bool = _read("HEAPLIVE_VERBOSE", "").lower() in ("1", "true", "yes")

    @classmethod
    def int_setting(cls, name: str) -> int:
        """整数の設定値を返す。検証前に呼んだ場合は ValueError になりうる。"""
        return int(getattr(cls, name))

    @classmethod
    def validate(cls, required_keys: list[str] | None = None) -> bool:
        """整数の設定値が解釈でき、範囲内にあるか検証する。

        Args:
            required_keys: 検証する環境変数名のリスト。Noneの場合は全キーを検証。

        Returns:
            すべての値が正しければ True。
        """
        all_keys = {
            "HEAPLIVE_SEED": (cls.SEED, None),
            "HEAPLIVE_NULLIFY_DEPTH": (cls.NULLIFY_DEPTH, 0),
            "HEAPLIVE_ENUM_BOUND": (cls.ENUM_BOUND, 0),
            "HEAPLIVE_RECURSION_LIMIT": (cls.RECURSION_LIMIT, 1000),
        }

        keys_to_check = (
            {k: all_keys[k] for k in required_keys if k in all_keys}
            if required_keys
            else all_keys
        )

        invalid = []
        for key, (raw, minimum) in keys_to_check.items():
            try:
                value = int(raw)
            except ValueError:
                invalid.append(f"{key}={raw!r}（整数ではありません）")
                continue
            if minimum is not None and value < minimum:
                invalid.append(f"{key}={value}（{minimum} 以上である必要があります）")

        if invalid:
            print("❌ 以下の設定値が不正です:", file=sys.stderr)
            for item in invalid:
                print(f"   - {item}", file=sys.stderr)
            print(
                "\n💡 .env または環境変数の HEAPLIVE_* を整数で設定してください。",
                file=sys.stderr,
            )
            return False

        return True
