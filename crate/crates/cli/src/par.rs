//! Deterministic fan-out over a slice with scoped threads.

use blockgen_core::Result;

/// Maps `f` over `items` on up to `threads` workers. Work is split into
/// contiguous chunks and results are reassembled in input order, so the
/// output (and which error surfaces first) never depends on scheduling.
pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let mut chunks: Vec<Result<Vec<R>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Result<Vec<R>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for part in chunks.drain(..) {
        out.extend(part?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use blockgen_core::Error;

    #[test]
    fn output_order_matches_input_order_for_any_thread_count() {
        let items: Vec<usize> = (0..97).collect();
        let expect: Vec<usize> = items.iter().map(|i| i * i).collect();
        for threads in [1, 2, 3, 8, 200] {
            let got = par_map(&items, threads, |i| Ok(i * i)).unwrap();
            assert_eq!(got, expect, "threads={threads}");
        }
    }

    #[test]
    fn the_first_failing_item_wins_regardless_of_scheduling() {
        let items: Vec<usize> = (0..64).collect();
        for threads in [1, 4, 16] {
            let err = par_map(&items, threads, |i| {
                if *i >= 10 {
                    Err(Error::invalid(format!("item {i}")))
                } else {
                    Ok(*i)
                }
            })
            .unwrap_err();
            assert_eq!(err.to_string(), "invalid argument: item 10");
        }
    }

    #[test]
    fn empty_input_yields_empty_output() {
        let items: Vec<usize> = Vec::new();
        assert!(par_map(&items, 4, |i| Ok(*i)).unwrap().is_empty());
    }
}
