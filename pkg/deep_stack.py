"""深い再帰を許すワーカースレッド上での実行"""

import functools
import sys
import threading
from typing import Callable, TypeVar

from config import Config

T = TypeVar("T")

WORKER_NAME = "heaplive-deep"
WORKER_STACK_SIZE = 512 * 1024 * 1024

_lock = threading.Lock()


def in_deep_stack() -> bool:
    return threading.current_thread().name == WORKER_NAME


def run_with_deep_stack(fn: Callable[..., T], *args, **kwargs) -> T:
    """fn を大きなスタックと引き上げた再帰上限のもとで実行する。

    入れ子の深い式（長いリストリテラルや深い再帰呼び出し）を扱うため、
    HEAPLIVE_RECURSION_LIMIT と WORKER_STACK_SIZE を設定した専用スレッドで評価する。
    既にそのスレッド内にいる場合はそのまま呼び出す。

    Raises:
        fn が送出した例外をそのまま送出する。
    """
    if in_deep_stack():
        return fn(*args, **kwargs)

    outcome: dict[str, object] = {}

    def target() -> None:
        try:
            outcome["value"] = fn(*args, **kwargs)
        except BaseException as e:  # noqa: BLE001 呼び出し元スレッドで送出し直す
            outcome["error"] = e

    with _lock:
        old_limit = sys.getrecursionlimit()
        old_size = threading.stack_size()
        sys.setrecursionlimit(max(old_limit, Config.int_setting("RECURSION_LIMIT")))
        try:
            threading.stack_size(WORKER_STACK_SIZE)
            worker = threading.Thread(target=target, name=WORKER_NAME, daemon=True)
            worker.start()
            worker.join()
        finally:
            threading.stack_size(old_size)
            sys.setrecursionlimit(old_limit)

    if "error" in outcome:
        raise outcome["error"]
    return outcome["value"]


def deep_stack(fn: Callable[..., T]) -> Callable[..., T]:
    """run_with_deep_stack を通して呼び出すデコレータ"""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return run_with_deep_stack(fn, *args, **kwargs)

    return wrapper
