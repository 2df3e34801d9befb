mod common;

use vidrec::topics::{fit_lda, held_out_log_likelihood, select_topic_count, LdaModel, LdaParams, SelectionSettings};

use common::*;

#[test]
fn planted_top_terms_come_from_one_vocabulary() {
    let (m, _) = planted_two_topic(21, 100);
    let model = fit_lda(&m, &LdaParams::new(2, 3)).unwrap();
    for t in 0..2 {
        let top = model.top_terms(t, 8).unwrap();
        let block = |w: &str| w[1..].parse::<usize>().unwrap() / 10;
        let first = block(&top[0].0);
        assert!(top.iter().all(|(w, _)| block(w) == first), "{top:?}");
        assert!(top.windows(2).all(|p| p[0].1 >= p[1].1));
    }
}

#[test]
fn same_seed_same_model() {
    let (m, _) = planted_two_topic(5, 60);
    let params = LdaParams { iterations: 100, ..LdaParams::new(3, 99) };
    let mut a = Vec::new();
    let mut b = Vec::new();
    fit_lda(&m, &params).unwrap().write_text(&mut a).unwrap();
    fit_lda(&m, &params).unwrap().write_text(&mut b).unwrap();
    assert_eq!(a, b);
    let reloaded = LdaModel::read_text(a.as_slice(), "mem").unwrap();
    let mut c = Vec::new();
    reloaded.write_text(&mut c).unwrap();
    assert_eq!(a, c);
}

#[test]
fn held_out_likelihood_is_finite_and_negative() {
    let (m, _) = planted_two_topic(8, 80);
    let train: Vec<usize> = (0..60).collect();
    let held: Vec<usize> = (60..80).collect();
    let model = fit_lda(&m.select(&train), &LdaParams { iterations: 100, ..LdaParams::new(2, 1) }).unwrap();
    let ll = held_out_log_likelihood(&model, &m.select(&held), 50, 4).unwrap();
    assert!(ll.is_finite() && ll < 0.0, "{ll}");
}

#[test]
fn selection_table_and_errors() {
    let (m, _) = planted_two_topic(2, 40);
    let settings = SelectionSettings { iterations: 100, ..SelectionSettings::default() };
    let sel = select_topic_count(&m, &[3], &settings, 1).unwrap();
    assert_eq!(sel.best, 3);
    assert_eq!(sel.scores.len(), 1);
    assert_eq!(sel.scores[0].fold_log_likelihoods.len(), 5);

    let again = select_topic_count(&m, &[3], &settings, 1).unwrap();
    assert_eq!(sel, again);

    let (tiny, _) = planted_two_topic(2, 4);
    assert!(select_topic_count(&tiny, &[2], &settings, 1).is_err());
    assert!(select_topic_count(&m, &[], &settings, 1).is_err());
}
