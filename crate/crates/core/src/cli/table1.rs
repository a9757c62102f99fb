use std::fmt::Write;

use crate::ansatz::param_count;
use crate::error::{Error, Result};
use crate::symmetry::{build_group, invariant_dimension};

/// N_p(α=1) as printed for N = 2..8. The N = 8 entry disagrees with (2α+1)N + 2αN².
const PRINTED_NP_ALPHA1: [usize; 7] = [14, 27, 44, 65, 90, 119, 132];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table1Row {
    pub n_sites: usize,
    pub np_alpha1: usize,
    pub np_alpha2: usize,
    pub dim_invariant: u64,
    pub full_dim: u64,
    pub note: Option<String>,
}

pub fn table1_report(n_max: usize) -> Result<Vec<Table1Row>> {
    if !(2..=12).contains(&n_max) {
        return Err(Error::config(None, format!("nmax must lie in 2..=12, got {n_max}")));
    }
    (2..=n_max)
        .map(|n| {
            let np_alpha1 = param_count(n, 1.0)?;
            let note = PRINTED_NP_ALPHA1
                .get(n - 2)
                .filter(|&&p| p != np_alpha1)
                .map(|p| format!("Np(1) reference value {p}; formula gives {np_alpha1}"));
            Ok(Table1Row {
                n_sites: n,
                np_alpha1,
                np_alpha2: param_count(n, 2.0)?,
                dim_invariant: invariant_dimension(&build_group(n)?),
                full_dim: 1u64 << (2 * n),
                note,
            })
        })
        .collect()
}

pub fn render_table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from("N,Np_alpha1,Np_alpha2,dim_IG,4^N,note\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n_sites,
            r.np_alpha1,
            r.np_alpha2,
            r.dim_invariant,
            r.full_dim,
            r.note.as_deref().unwrap_or("")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_row() {
        let rows = table1_report(2).unwrap();
        let r = &rows[0];
        assert_eq!((r.np_alpha1, r.np_alpha2, r.dim_invariant, r.full_dim), (14, 26, 10, 16));
        assert!(r.note.is_none());
    }

    #[test]
    fn only_eight_sites_flagged() {
        let rows = table1_report(9).unwrap();
        let flagged: Vec<usize> = rows.iter().filter(|r| r.note.is_some()).map(|r| r.n_sites).collect();
        assert_eq!(flagged, vec![8]);
        assert_eq!(rows[6].np_alpha1, 152);
    }

    #[test]
    fn range_checked() {
        assert!(table1_report(1).is_err());
        assert!(table1_report(13).is_err());
    }
}
