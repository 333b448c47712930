use std::path::PathBuf;

use skipfree::io::{load_chain, read_family, ChainFile};
use skipfree::CliError;
use skipfree_core::fixtures;

fn data(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "data", name].iter().collect()
}

#[test]
fn shipped_chains_are_the_fixtures() {
    let c4 = load_chain(&data("chain4.json")).unwrap();
    let want = fixtures::chain4();
    assert!((c4.spec.matrix() - want.matrix()).amax() < 1e-15);
    assert_eq!(c4.spec.top(), want.top());
    assert!(c4.pi.is_none());
    let c4a = load_chain(&data("chain4a.json")).unwrap();
    assert!((c4a.spec.matrix() - fixtures::chain4_absorbing().matrix()).amax() < 1e-15);
}

#[test]
fn invalid_chain_reports_every_violation() {
    match load_chain(&data("bad.json")) {
        Err(e @ CliError::Validation(_)) => {
            let CliError::Validation(v) = &e else { unreachable!() };
            assert_eq!(v.len(), 5);
            assert_eq!(e.exit_code(), 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn measure_length_is_checked() {
    let mut f = ChainFile::from_spec(&fixtures::two_state(), None);
    f.pi = Some(vec![0.5, 0.25, 0.25]);
    assert!(f.measure().is_err());
    f.pi = Some(vec![0.4, 0.6]);
    assert_eq!(f.measure().unwrap().unwrap().at(1), 0.6);
}

#[test]
fn family_files() {
    let biased = read_family(&data("bd_biased.json")).unwrap().members().unwrap();
    assert_eq!(biased.iter().map(|m| m.len()).collect::<Vec<_>>(), [9, 17, 33, 65]);
    assert_eq!(biased[0], fixtures::birth_death(9, 0.7, 0.3));
    let list = format!(
        "[{}, {}]",
        serde_json::to_string(&ChainFile::from_spec(&fixtures::two_state(), None)).unwrap(),
        serde_json::to_string(&ChainFile::from_spec(&fixtures::chain4(), None)).unwrap()
    );
    let fam: skipfree::io::FamilyFile = serde_json::from_str(&list).unwrap();
    assert_eq!(fam.members().unwrap().len(), 2);
}
