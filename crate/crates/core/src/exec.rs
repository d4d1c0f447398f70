//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] runs on the rayon
//! pool; without it every execution mode is sequential. Results always come back in input
//! order, so outputs do not depend on the schedule.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

pub fn par_map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// [`par_map`] over fallible closures; the first error in input order wins.
pub fn try_par_map<T, R, E, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    par_map(exec, items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = par_map(Execution::Sequential, &items, |x| x * x);
        let par = par_map(Execution::Parallel, &items, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 999 * 999);
    }

    #[test]
    fn first_error_in_input_order() {
        let items: Vec<i32> = (0..100).collect();
        let r: Result<Vec<i32>, i32> = try_par_map(Execution::Parallel, &items, |&x| {
            if x % 30 == 29 {
                Err(x)
            } else {
                Ok(x)
            }
        });
        assert_eq!(r, Err(29));
    }
}
