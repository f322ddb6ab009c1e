use outwide::data::{
    load_table, schema_of, standardize_column, tertile_code, unstandardize, write_table, Column, ColumnKind,
    Dataset, LoadOptions, Schema, Transform,
};
use proptest::prelude::*;

fn cells() -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(prop::option::weighted(0.85, -1e3..1e3f64), 3..60)
        .prop_filter("needs spread", |v| {
            let obs: Vec<f64> = v.iter().flatten().copied().collect();
            obs.len() >= 2 && obs.iter().any(|&x| (x - obs[0]).abs() > 1e-6)
        })
}

proptest! {
    #[test]
    fn standardize_round_trip(v in cells()) {
        let col = Column::continuous("x", v.clone()).unwrap();
        let (z, rec) = standardize_column(&col).unwrap();
        let back = unstandardize(&z, &rec).unwrap();
        for (row, orig) in v.iter().enumerate() {
            match orig {
                None => prop_assert!(back.is_missing(row)),
                Some(x) => prop_assert!((back.get(row).unwrap() - x).abs() <= 1e-10 * x.abs().max(1.0)),
            }
        }
    }

    #[test]
    fn tertile_sizes_bounded_by_ties(raw in prop::collection::vec(0i32..12, 6..80)) {
        let v: Vec<Option<f64>> = raw.iter().map(|&x| Some(f64::from(x))).collect();
        let col = Column::continuous("x", v).unwrap();
        prop_assume!(raw.iter().collect::<std::collections::BTreeSet<_>>().len() >= 3);
        let (coded, rec) = tertile_code(&col).unwrap();
        let Transform::Tertile { lower_cut, upper_cut } = rec.transform else { panic!("not a tertile record") };
        let mut sizes = [0usize; 3];
        for r in 0..coded.len() {
            sizes[coded.get(r).unwrap() as usize] += 1;
        }
        // Without ties the groups would hold ceil(n/3), ceil(2n/3) - ceil(n/3)
        // and the rest; each group may move from that only by the tied
        // values at its adjacent cut(s).
        let n = raw.len();
        let at = |cut: f64| raw.iter().filter(|&&x| f64::from(x) == cut).count();
        let (t_lo, t_hi) = (at(lower_cut), at(upper_cut));
        let (c1, c2) = (n.div_ceil(3), (2 * n).div_ceil(3));
        prop_assert!(sizes[0] >= c1 && sizes[0] < c1 + t_lo, "bottom {sizes:?}");
        prop_assert!(sizes[2] <= n - c2 && sizes[2] + t_hi > n - c2, "top {sizes:?}");
        prop_assert!(sizes[1].abs_diff(c2 - c1) < t_lo + t_hi, "middle {sizes:?}");
    }

    #[test]
    fn write_then_load_is_identity(
        cont in prop::collection::vec(prop::option::weighted(0.8, -1e6..1e6f64), 1..40),
        seed in any::<u64>(),
    ) {
        let n = cont.len();
        let bin: Vec<Option<f64>> = (0..n)
            .map(|i| if (seed >> (i % 64)) & 3 == 0 { None } else { Some(((seed >> (i % 61)) & 1) as f64) })
            .collect();
        let cat: Vec<Option<&str>> = (0..n).map(|i| [Some("a"), Some("b c"), None][(i + seed as usize) % 3]).collect();
        let ds = Dataset::new(vec![
            Column::continuous("x", cont).unwrap(),
            Column::binary("b", bin).unwrap(),
            Column::categorical("g", cat),
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_table(&ds, &mut buf, b',', "NA").unwrap();
        let back = load_table(buf.as_slice(), &schema_of(&ds), &LoadOptions::default()).unwrap();
        for name in ["x", "b", "g"] {
            let (a, b) = (ds.column(name).unwrap(), back.column(name).unwrap());
            prop_assert_eq!(a.missing_mask(), b.missing_mask());
            for r in 0..n {
                match a.kind() {
                    ColumnKind::Categorical => prop_assert_eq!(a.level_at(r), b.level_at(r)),
                    _ => prop_assert_eq!(a.get(r), b.get(r)),
                }
            }
        }
    }
}

#[test]
fn cohort_sized_file_loads() {
    let mut text = String::new();
    let names: Vec<String> = (0..42).map(|j| format!("v{j}")).collect();
    text.push_str(&names.join(","));
    text.push('\n');
    for i in 0..2948 {
        let row: Vec<String> = (0..42).map(|j| format!("{}", (i * 7 + j * 13) % 101)).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let schema: Schema = names.iter().map(|n| (n.clone(), ColumnKind::Continuous)).collect();
    let ds = load_table(text.as_bytes(), &schema, &LoadOptions::default()).unwrap();
    assert_eq!(ds.n_rows(), 2948);
    assert_eq!(ds.n_columns(), 42);
}

#[test]
fn binary_two_error_names_cell() {
    let text = "id,b\n1,0\n2,2\n";
    let mut schema = Schema::new();
    schema.insert("id".into(), ColumnKind::Continuous);
    schema.insert("b".into(), ColumnKind::Binary);
    let err = load_table(text.as_bytes(), &schema, &LoadOptions::default()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("'b'") && msg.contains("row 2"), "{msg}");
}
