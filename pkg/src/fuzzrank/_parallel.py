from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, items, jobs: int = 1) -> list:
    """Ordered map over ``items``; results are merged by index, never by completion."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(jobs, len(items))
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
