import json
import logging
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Union

from calc.deformation import DeformParams, params_from_dict
from calc.exceptions import ConfigError
from calc.grassmann import SuperFun
from config import FIXTURES_DIR, GOLDEN_DIR


logger = logging.getLogger(__name__)
if not logger.handlers:
    logging.basicConfig(level=logging.INFO, format="[%(levelname)s] %(message)s")

PathLike = Union[str, Path]


def read_document(path: PathLike) -> Dict[str, Any]:
    """读取 JSON 或 TOML 文档，按扩展名区分"""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"参数文件不存在: {path}")
    logger.info(f"读取参数文件: {p}")
    try:
        if p.suffix.lower() == ".toml":
            with open(p, "rb") as fh:
                return tomllib.load(fh)
        with open(p, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"无法解析 {p.name}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{p.name} 顶层必须是对象")
    return payload


def load_params(path: PathLike) -> DeformParams:
    return params_from_dict(read_document(path))


def write_json(payload: Dict[str, Any], path: PathLike) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    # sort_keys 保证两次运行逐字节一致
    p.write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"已写出: {p}")
    return p


def write_text(text: str, path: PathLike) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
    logger.info(f"已写出: {p}")
    return p


def save_fixture(name: str, triples: List[tuple], directory: PathLike = FIXTURES_DIR) -> Path:
    """三元组序列化成 JSON 列表，每个元素是 SuperFun.to_json()"""
    payload = {"name": name, "triples": [[f.to_json() for f in t] for t in triples]}
    return write_json(payload, Path(directory) / f"{name}.json")


def load_fixture(name: str, directory: PathLike = FIXTURES_DIR) -> List[tuple]:
    p = Path(directory) / f"{name}.json"
    if not p.exists():
        raise FileNotFoundError(f"夹具不存在: {p}")
    payload = json.loads(p.read_text(encoding="utf-8"))
    return [tuple(SuperFun.from_json(f) for f in t) for t in payload["triples"]]


def golden_path(command: str, directory: PathLike = GOLDEN_DIR) -> Path:
    return Path(directory) / f"{command}.json"


def load_golden(command: str, directory: PathLike = GOLDEN_DIR) -> Union[Dict[str, Any], None]:
    p = golden_path(command, directory)
    if not p.exists():
        logger.warning(f"没有金标准文件: {p}")
        return None
    return json.loads(p.read_text(encoding="utf-8"))


def save_golden(command: str, report: Dict[str, Any], directory: PathLike = GOLDEN_DIR) -> Path:
    return write_json(report, golden_path(command, directory))


def compare_golden(report: Dict[str, Any], golden: Dict[str, Any]) -> List[str]:
    """只比较判定（passed、verdict、family 等），残差数值允许随平台浮动"""
    differences: List[str] = []

    def walk(left: Any, right: Any, where: str) -> None:
        if isinstance(left, dict) and isinstance(right, dict):
            for key in sorted(set(left) | set(right)):
                if key in ("residual", "residuals", "overlaps", "basis_change", "config"):
                    continue
                walk(left.get(key), right.get(key), f"{where}.{key}")
        elif isinstance(left, list) and isinstance(right, list):
            if len(left) != len(right):
                differences.append(f"{where}: 长度 {len(left)} ≠ {len(right)}")
                return
            for n, (a, b) in enumerate(zip(left, right)):
                walk(a, b, f"{where}[{n}]")
        elif isinstance(left, float) or isinstance(right, float):
            return
        elif left != right:
            differences.append(f"{where}: {left!r} ≠ {right!r}")

    walk(report, golden, "$")
    return differences
