from ramanujan.utils.utils import get_logger, load_run_config, parse_grid, save_json, save_table


__all__ = [
    "get_logger",
    "load_run_config",
    "parse_grid",
    "save_json",
    "save_table",
]
