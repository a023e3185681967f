use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exact::{Generator, Measure};
use crate::model::{pattern_iter, Specification, StateSpace, Volume};

/// Dense linear solves up to this dimension, power iteration above.
const DENSE_CAP: usize = 2048;

const RESIDUAL_TOL: f64 = 1e-10;

/// Verifies that the jump graph is strongly connected; on failure names a
/// closed class via the condensation of the strongly connected components.
pub fn check_irreducible(gen: &Generator) -> Result<()> {
    let n = gen.len();
    if n <= 1 {
        return Ok(());
    }
    let sccs = tarjan_sccs(gen);
    if sccs.len() == 1 {
        return Ok(());
    }
    // find a component with no outgoing edges: a closed class
    for class in &sccs {
        let mut closed = true;
        'rows: for &i in class {
            for (c, _) in gen.row(i) {
                if !class.contains(&(c as usize)) {
                    closed = false;
                    break 'rows;
                }
            }
        }
        if closed {
            let outside = (0..n).find(|i| !class.contains(i)).unwrap_or(0);
            let mut head: Vec<u64> = class.iter().take(4).map(|&i| i as u64).collect();
            head.sort_unstable();
            return Err(Error::Reducible {
                inside: class[0] as u64,
                outside: outside as u64,
                class_size: class.len(),
                class_head: head,
            });
        }
    }
    unreachable!("a finite condensation always has a sink component")
}

/// Iterative Tarjan over the off-diagonal sparsity pattern.
fn tarjan_sccs(gen: &Generator) -> Vec<Vec<usize>> {
    let n = gen.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut sccs: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0usize;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // explicit DFS stack: (node, next neighbor position)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&(v, pos)) = call.last() {
            if pos == 0 {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            let degree = gen.row(v).count();
            if pos < degree {
                call.last_mut().unwrap().1 += 1;
                let (c, _) = gen.row(v).nth(pos).unwrap();
                let w = c as usize;
                if index[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    sccs.push(comp);
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    sccs
}

/// Solves `mu^T L = 0` with unit mass; the residual `max |mu^T L|` is
/// certified below 1e-10 or an error is returned.
pub fn stationary_measure(gen: &Generator) -> Result<Measure> {
    check_irreducible(gen)?;
    let n = gen.len();
    let p = if n <= DENSE_CAP {
        dense_stationary(gen)
    } else {
        power_iteration_stationary(gen)?
    };
    let mut residual = vec![0.0; n];
    gen.apply_transpose(&p, &mut residual);
    let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if worst > RESIDUAL_TOL {
        return Err(Error::NoConvergence(format!(
            "stationary residual {worst:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )));
    }
    let m = Measure::from_weights(p)?;
    m.check_strictly_positive()?;
    Ok(m)
}

fn dense_stationary(gen: &Generator) -> Vec<f64> {
    let n = gen.len();
    // rows of A are L^T with the first equation replaced by the mass constraint
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = gen.diag()[i];
        for (c, v) in gen.row(i) {
            a[(c as usize, i)] = v;
        }
    }
    for j in 0..n {
        a[(0, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let lu = a.lu();
    let x = lu.solve(&b).expect("irreducible generator gives a nonsingular system");
    x.iter().map(|v| v.max(0.0)).collect()
}

fn power_iteration_stationary(gen: &Generator) -> Result<Vec<f64>> {
    let n = gen.len();
    let rate = gen.max_exit_rate();
    if rate == 0.0 {
        return Ok(vec![1.0 / n as f64; n]);
    }
    let transpose = gen.transpose();
    let mut v = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = vec![0.0; n];
    for iter in 0..500_000u64 {
        // v <- v P with P = I + L / rate, computed through the transpose
        transpose.apply(&v, &mut next);
        for (nv, ov) in next.iter_mut().zip(&v) {
            *nv = ov + *nv / rate;
        }
        let mass: f64 = next.iter().sum();
        for nv in &mut next {
            *nv /= mass;
        }
        std::mem::swap(&mut v, &mut next);
        if iter % 16 == 0 {
            gen.apply_transpose(&v, &mut residual);
            let worst = residual.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            if worst <= RESIDUAL_TOL * 0.5 {
                return Ok(v);
            }
        }
    }
    Err(Error::NoConvergence(
        "power iteration did not reach the stationary residual tolerance".into(),
    ))
}

/// Default DLR test volumes: all single sites plus all edges.
pub fn dlr_volumes(volume: &Volume) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..volume.len()).map(|x| vec![x]).collect();
    out.extend(volume.edges().into_iter().map(|(a, b)| vec![a, b]));
    out
}

/// Max DLR discrepancy `sup_{Lambda, A} |mu(1_A) - mu(gamma_Lambda(1_A|.))|`
/// over the indicator basis and the given volumes.
pub fn gibbs_check(
    mu: &Measure,
    spec: &Specification,
    space: &StateSpace,
    volumes: &[Vec<usize>],
) -> Result<f64> {
    let n = space.count() as usize;
    if mu.len() != n {
        return Err(Error::Invalid(format!(
            "measure has {} entries for a {n}-state space",
            mu.len()
        )));
    }
    let q = space.q();
    let mut worst = 0.0f64;
    let mut smeared = vec![0.0f64; n];
    for lambda in volumes {
        smeared.iter_mut().for_each(|v| *v = 0.0);
        let w = space.alphabet().region_weight(lambda.len());
        for idx in space.states() {
            let eta = space.config_of(idx);
            let weight = mu.get(idx);
            for xi in pattern_iter(q, lambda.len()) {
                let d = spec.density(lambda, &xi, &eta)?;
                let target = space.with_patch(idx, lambda, &xi);
                smeared[target as usize] += weight * d * w;
            }
        }
        for idx in 0..n {
            worst = worst.max((smeared[idx] - mu.get(idx as u64)).abs());
        }
    }
    Ok(worst)
}
