use drill::embeddings::generate_embeddings;
use drill::eval::{evaluate, median, read_rows, summarize, CsvSink, EvalSettings, Method, CSV_HEADER};
use drill::family::bundled_family_kb;
use drill::qnet::init_network;
use drill::search::SearchConfig;
use drill::{parse_concept, HeuristicParams, KnowledgeBase, LearningProblem};

fn problem(kb: &KnowledgeBase, target: &str) -> LearningProblem {
    let c = parse_concept(target).unwrap();
    let pos = (*kb.retrieve(&c).unwrap()).clone();
    LearningProblem::new(pos.clone(), pos.complement()).unwrap().with_target(c)
}

fn settings() -> EvalSettings<'static> {
    EvalSettings {
        search: SearchConfig { max_expressions_tested: 3000, max_runtime_seconds: 30.0, ..Default::default() },
        celoe: HeuristicParams::default(),
        ocel: HeuristicParams { lambda: 0.01, ..Default::default() },
        drill: None,
    }
}

#[test]
fn celoe_learns_brother() {
    let kb = bundled_family_kb();
    let lp = problem(&kb, "Male and (hasSibling some Thing)");
    let problems = vec![("brother".to_string(), lp)];
    let rows = evaluate(&kb, &problems, &[Method::Celoe], &settings(), |_| Ok(())).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].f1, 1.0);
    assert_eq!(rows[0].method, Method::Celoe);
}

#[test]
fn csv_round_trip_is_exact() {
    let kb = bundled_family_kb();
    let table = generate_embeddings(&kb, 8, 0, 0.1).unwrap();
    let params = init_network(8, 16, 0).unwrap();
    let problems: Vec<_> = ["Female", "hasChild some Male", "Male and (married some Thing)"]
        .iter()
        .enumerate()
        .map(|(i, t)| (format!("lp{i}"), problem(&kb, t)))
        .collect();
    let cfg = EvalSettings { drill: Some((&params, &table)), ..settings() };
    let mut sink = CsvSink::new(Vec::new());
    let rows = evaluate(&kb, &problems, &Method::ALL, &cfg, |r| sink.write(r)).unwrap();
    assert_eq!(rows.len(), 12);
    let bytes = sink.into_inner().unwrap();
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(read_rows(text.as_bytes()).unwrap(), rows);
    assert!(read_rows("a,b\n1,2\n".as_bytes()).is_err());
    for row in &rows {
        assert!(row.expressions_tested >= 1);
        assert!(parse_concept(&row.concept).is_ok());
    }
}

#[test]
fn summaries_count_and_average() {
    let kb = bundled_family_kb();
    let problems: Vec<_> = ["Female", "Male"].iter().map(|t| (t.to_string(), problem(&kb, t))).collect();
    let rows = evaluate(&kb, &problems, &[Method::Celoe, Method::Random], &settings(), |_| Ok(())).unwrap();
    let summaries = summarize(&rows);
    assert_eq!(summaries.iter().map(|s| s.method).collect::<Vec<_>>(), vec![Method::Celoe, Method::Random]);
    for s in &summaries {
        let mine: Vec<_> = rows.iter().filter(|r| r.method == s.method).collect();
        assert_eq!(s.problems, 2);
        assert_eq!(s.solved, mine.iter().filter(|r| r.f1 == 1.0).count());
        let mean = mine.iter().map(|r| r.expressions_tested as f64).sum::<f64>() / 2.0;
        assert_eq!(s.mean_expressions, mean);
        assert_eq!(s.median_expressions, mean);
    }
    assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    assert!(median(&mut []).is_nan());
}

#[test]
fn drill_without_a_model_is_an_error() {
    let kb = bundled_family_kb();
    let problems = vec![("x".to_string(), problem(&kb, "Female"))];
    assert!(evaluate(&kb, &problems, &[Method::Drill], &settings(), |_| Ok(())).is_err());
    assert!("celoe".parse::<Method>().is_ok());
    assert!("eltl".parse::<Method>().is_err());
}
