use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_sgl");

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(rel)
}

fn sgl(db: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .env("SGL_DB_PATH", db)
        .env_remove("SGL_PORT")
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn loaded_db(dir: &Path) -> PathBuf {
    let db = dir.join("sgl.db");
    let cars = fixture("cars.csv");
    let out = sgl(&db, &["load", "--file", cars.to_str().unwrap(), "--table", "cars"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    db
}

fn non_null_cars() -> usize {
    std::fs::read_to_string(fixture("cars.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| {
            let f: Vec<&str> = l.split(',').collect();
            !f[1].is_empty() && !f[2].is_empty() && !f[3].is_empty()
        })
        .count()
}

#[test]
fn load_prints_schema_summary() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("sgl.db");
    let cars = fixture("cars.csv");
    let out = sgl(&db, &["load", "--file", cars.to_str().unwrap(), "--table", "cars"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "cars: 5 columns\n");

    let out = sgl(&db, &["load", "--file", cars.to_str().unwrap(), "--table", "cars", "--no-replace"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("NameCollision"));
}

#[test]
fn load_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("sgl.db");
    let missing = dir.path().join("missing.csv");
    let out = sgl(&db, &["load", "--file", missing.to_str().unwrap(), "--table", "m"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing.csv"));

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "a,b\n1,2\n3,4\n5\n").unwrap();
    let out = sgl(&db, &["load", "--file", ragged.to_str().unwrap(), "--table", "r"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("RaggedRow") && err.contains("ragged.csv:4:"), "{err}");
}

#[test]
fn run_writes_one_circle_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let db = loaded_db(dir.path());
    let svg = dir.path().join("out.svg");
    let input = fixture("corpus/03_color.sgl");
    let out = sgl(&db, &["run", "--input", input.to_str().unwrap(), "--output", svg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("W_NULL_DROPPED"));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches("<circle").count(), non_null_cars());
}

#[test]
fn run_pie_draws_wedges() {
    let dir = tempfile::tempdir().unwrap();
    let db = loaded_db(dir.path());
    let input = fixture("corpus/18_pie.sgl");
    let out = sgl(&db, &["run", "--input", input.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("<path").count(), 3);
}

#[test]
fn statement_errors_exit_1_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let db = loaded_db(dir.path());
    let out = sgl(
        &db,
        &["run", "--statement", "visualize horsepower as x, year as theta from cars using points;"],
    );
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.starts_with("<statement>:1:") && err.contains("E_COORD_MIX"), "{err}");

    let out = sgl(&db, &["run", "--statement", "visualize from cars;"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("<statement>:1:11: UnexpectedToken"));
}

#[test]
fn statement_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let db = loaded_db(dir.path());
    let mut child = Command::new(BIN)
        .env("SGL_DB_PATH", &db)
        .args(["run", "--input", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"visualize year as x, count(*) as y from cars group by year using bars;")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8(out.stdout).unwrap().matches("<rect").count() >= 13);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let db = loaded_db(dir.path());
    let input = fixture("corpus/12_jittered.sgl");
    let run = |seed: &str| sgl(&db, &["run", "--input", input.to_str().unwrap(), "--seed", seed]).stdout;
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn config_and_size_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let db = loaded_db(dir.path());
    let cfg = dir.path().join("render.conf");
    std::fs::write(&cfg, "# small\nwidth = 320\nheight = 200\n").unwrap();
    let input = fixture("corpus/03_color.sgl");
    let out = sgl(&db, &["run", "--input", input.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().contains("width=\"320\""));

    std::fs::write(&cfg, "depth = 3\n").unwrap();
    let out = sgl(&db, &["run", "--input", input.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown key"));
}

#[test]
fn preloaded_tables_without_database() {
    let cars = fixture("cars_sample.csv");
    let out = Command::new(BIN)
        .env_remove("SGL_DB_PATH")
        .args([
            "run",
            "--table",
            &format!("cars={}", cars.display()),
            "--statement",
            "visualize horsepower as x, miles_per_gallon as y from cars using points;",
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn usage_errors_are_distinct() {
    let out = Command::new(BIN).args(["run"]).output().unwrap();
    assert_eq!(code(&out), 64);
    let out = Command::new(BIN).args(["--help"]).output().unwrap();
    assert_eq!(code(&out), 0);
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start(db: &Path, port: u16) -> Server {
    let mut child = Command::new(BIN)
        .env("SGL_DB_PATH", db)
        .args(["serve", "--port", &port.to_string()])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    assert!(line.starts_with("listening on"), "{line}");
    Server(child)
}

fn get(port: u16, path: &str) -> String {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).unwrap();
    resp
}

#[test]
fn serve_answers_health_and_reports_bind_failure() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("sgl.db");
    let port = free_port();
    let _server = start(&db, port);
    let resp = get(port, "/health");
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"status\":\"ok\""));

    let out = sgl(&db, &["serve", "--port", &port.to_string()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn catalog_persists_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let db = loaded_db(dir.path());
    let port = free_port();
    let server = start(&db, port);
    assert!(get(port, "/tables").contains("\"name\":\"cars\""));
    drop(server);

    let port = free_port();
    let _server = start(&db, port);
    let resp = get(port, "/tables");
    assert!(resp.contains("\"name\":\"cars\"") && resp.contains("\"row_count\":406"), "{resp}");
}
