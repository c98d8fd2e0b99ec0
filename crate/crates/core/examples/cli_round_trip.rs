//! Runs the command-line workflow in-process: simulate, infer, estimate.

use mg1_bayes::cli::run;

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let data = dir.path().join("departures.csv");
    let post = dir.path().join("posterior.txt");
    let (data, post) = (data.to_str().unwrap(), post.to_str().unwrap());
    let steps: [&[&str]; 3] = [
        &["simulate", "--lambda", "1", "--service", "exp:2", "--n", "20000", "--seed", "5", "--out", data],
        &["infer", "--data", data, "--out", post],
        &["estimate", "--posterior", post, "--transform", "pi", "--grid", "0:1:6"],
    ];
    for args in steps {
        let code =
            run(std::iter::once("mg1").chain(args.iter().copied()), &mut std::io::stdout(), &mut std::io::stderr());
        assert_eq!(code, 0, "{args:?}");
    }
    print!("{}", std::fs::read_to_string(post).unwrap());
}
