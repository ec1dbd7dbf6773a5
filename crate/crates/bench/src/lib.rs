//! Fixtures shared by the solver benchmarks.

use relperf_core::{Game, Market, Preference, WealthVector};

/// Lognormal market with `theta = 0.3`, `T = 1`.
pub fn market(nodes: usize) -> Market {
    Market::lognormal(0.3, 1.0, nodes).expect("valid market")
}

/// `n` sine-perturbed CRRA(2) agents with amplitude 0.1 and `λ = 0.5`.
pub fn sine_game(n: usize) -> Game {
    let p = Preference::sine_perturbed(2.0, 0.1).expect("valid preference");
    Game::new(&vec![(p, 0.5); n]).expect("valid game")
}

/// `n` tanh-blended agents with `λ = 0.05`.
pub fn tanh_game(n: usize) -> Game {
    let p = Preference::tanh_blend(2.0, 0.5).expect("valid preference");
    Game::new(&vec![(p, 0.05); n]).expect("valid game")
}

/// `n` CRRA agents with rates cycling through 0.8, 2 and 5.
pub fn crra_game(n: usize) -> Game {
    let rates = [0.8, 2.0, 5.0];
    let players: Vec<_> = (0..n)
        .map(|i| (Preference::crra(rates[i % 3]).expect("valid preference"), 0.5))
        .collect();
    Game::new(&players).expect("valid game")
}

pub fn unit_wealth(n: usize) -> WealthVector {
    WealthVector::new(vec![1.0; n]).expect("positive wealth")
}
