//! Tabulates the per-factor bit budget k as a function of modulus count s
//! and inner dimension q. One row per (q, s); k is left empty when the
//! modulus supply or the budget runs out, so grids stay rectangular.

use ozmm_core::{
    build_fp64_modulus_set, build_int8_modulus_set, plan_budgets, BudgetMode, ModulusSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeChoice {
    Int8,
    Fp64,
}

impl RegimeChoice {
    pub fn label(self) -> &'static str {
        match self {
            RegimeChoice::Int8 => "int8",
            RegimeChoice::Fp64 => "fp64",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KplotRow {
    pub q: u64,
    pub s: usize,
    pub k: Option<u32>,
}

/// `table_q_max` sizes the Fp64 modulus table (a table is built once for the
/// largest dimension in an experiment, then evaluated at each q); the Int8
/// chain ignores it.
pub fn kplot(regime: RegimeChoice, qs: &[u64], ss: &[usize], table_q_max: u64) -> Vec<KplotRow> {
    let mut rows = Vec::with_capacity(qs.len() * ss.len());
    for &s in ss {
        let set: Option<ModulusSet> = match regime {
            RegimeChoice::Int8 => build_int8_modulus_set(s).ok(),
            RegimeChoice::Fp64 => build_fp64_modulus_set(s, table_q_max).ok(),
        };
        let product = set.map(|set| set.product());
        for &q in qs {
            let k = product
                .as_ref()
                .and_then(|m| plan_budgets(m, q, BudgetMode::Symmetric).ok())
                .map(|plan| plan.k_a);
            rows.push(KplotRow { q, s, k });
        }
    }
    rows
}

pub fn rows_to_csv(rows: &[KplotRow]) -> String {
    let mut out = String::from("q,s,k\n");
    for row in rows {
        match row.k {
            Some(k) => out.push_str(&format!("{},{},{}\n", row.q, row.s, k)),
            None => out.push_str(&format!("{},{},\n", row.q, row.s)),
        }
    }
    out
}
