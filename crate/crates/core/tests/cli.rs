//! The `samdde` binary: CSV shapes, exit codes and byte stability.

use std::process::{Command, Output};

fn samdde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samdde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn solve_prints_history_block_and_segments() {
    let o = samdde(&[
        "solve",
        "--problem",
        "toggle",
        "--method",
        "sam-rk4",
        "--omega",
        "16pi",
        "--N",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "segment,n,t,x1,x2");
    assert_eq!(lines.len(), 1 + 5 * 2);
    for (i, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[0], (i / 2).to_string());
        assert_eq!(fields[1], (i % 2).to_string());
        let t: f64 = fields[2].parse().unwrap();
        let expected = 0.5 * ((i / 2) as f64 - 1.0) + 0.5 * (i % 2) as f64;
        assert!((t - expected).abs() < 1e-12, "{line}");
    }
    assert!(lines[1].starts_with("0,0,-5e-1,5e-1,2e0"));
    assert!(!text.contains('\r'));
}

#[test]
fn invalid_configuration_exits_with_two() {
    let o = samdde(&["solve", "--N", "2", "--omega", "16pi", "--method", "sam-rk4"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("n=0") && err.contains("j=1") && err.contains("k=4"),
        "{err}"
    );
}

#[test]
fn second_order_scheme_fits_one_macro_step() {
    let o = samdde(&[
        "solve",
        "--problem",
        "toggle",
        "--method",
        "sam-rk2",
        "--omega",
        "16pi",
        "--N",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bad_arguments_exit_with_three() {
    for args in [
        vec!["solve", "--omega", "banana"],
        vec!["solve", "--omega", "16pi", "--method", "sam-rk9"],
        vec!["table", "--omega", "16pi", "--N", "0"],
        vec!["table", "--omega", "16pi", "--component", "3"],
        vec!["solve", "--omega", "1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(samdde(&args).status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn table_marks_infeasible_cells() {
    let args = ["table", "--omega", "16pi,32pi", "--N", "1,2"];
    let o = samdde(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,16pi,32pi");
    assert!(lines[1].starts_with("1,1.17"));
    assert!(lines[2].starts_with("2,***,3.01"));
    assert_eq!(stdout(&samdde(&args)), text, "byte-stable output");
}

#[test]
fn strobo_metric_in_case_two_is_reported_as_error_cell() {
    let o = samdde(&["table", "--omega", "200", "--N", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "N,200\n4,ERR\n");
    let o = samdde(&["table", "--omega", "200", "--N", "4", "--metric", "endpoint"]);
    assert!(stdout(&o).starts_with("N,200\n4,5.1"));
}

#[test]
fn order_reports_slopes_and_na() {
    let o = samdde(&["order", "--omega", "64pi,128pi", "--N", "1,2,4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("kind,omega,N,work_units,error,slope,residual\n"));
    let slope_line = text.lines().find(|l| l.starts_with("N-slope,128pi")).unwrap();
    let slope: f64 = slope_line.split(',').nth(5).unwrap().parse().unwrap();
    assert!((slope + 4.0).abs() < 0.4, "{slope}");
    assert!(text.lines().any(|l| l == "omega-slope,NA,1,NA,NA,NA,NA"));
}

#[test]
fn output_file_is_written() {
    let path = std::env::temp_dir().join(format!("samdde-cli-{}.csv", std::process::id()));
    let o = samdde(&["solve", "--omega", "16pi", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.starts_with("segment,n,t,x1,x2\n"));
}

#[test]
fn propcheck_passes() {
    let o = samdde(&["propcheck"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
    assert!(text.contains("RK4,4,1,4,true,2.094395e0,2.094395e0,true"));
}

#[test]
fn forced_case_two_on_case_one_problem_has_empty_tail() {
    let a = samdde(&["solve", "--omega", "32pi", "--N", "2"]);
    let b = samdde(&["solve", "--omega", "32pi", "--N", "2", "--case", "force2"]);
    assert_eq!(b.status.code(), Some(0));
    let tails: Vec<String> = stdout(&b)
        .lines()
        .filter(|l| l.contains(",tail,"))
        .map(String::from)
        .collect();
    assert_eq!(tails.len(), 4);
    // Unsnapped phase offsets differ from zero by rounding only.
    let forced: Vec<String> = stdout(&b)
        .lines()
        .filter(|l| !l.contains(",tail,"))
        .map(String::from)
        .collect();
    let plain = stdout(&a);
    assert_eq!(forced.len(), plain.lines().count());
    for (x, y) in forced.iter().zip(plain.lines()).skip(1) {
        let parse = |l: &str| {
            l.split(',')
                .skip(2)
                .map(|v| v.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        };
        for (u, v) in parse(x).iter().zip(parse(y)) {
            assert!((u - v).abs() < 1e-12, "{x} vs {y}");
        }
    }
}
