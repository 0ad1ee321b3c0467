//! External SMT-LIB v2 solver process and model parsing.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use num_traits::Zero;

use crate::numeric::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

/// Parses a whitespace-separated sequence of s-expressions. String literals
/// and `|quoted|` symbols are kept as single atoms.
pub fn parse_sexps(text: &str) -> Vec<Sexp> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                if stack.len() > 1 {
                    let done = stack.pop().unwrap();
                    stack.last_mut().unwrap().push(Sexp::List(done));
                }
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            '"' | '|' => {
                let close = c;
                let mut s = String::new();
                s.push(c);
                for c in chars.by_ref() {
                    s.push(c);
                    if c == close {
                        break;
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            _ => {
                let mut s = String::new();
                s.push(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
    }
    while stack.len() > 1 {
        let done = stack.pop().unwrap();
        stack.last_mut().unwrap().push(Sexp::List(done));
    }
    stack.pop().unwrap()
}

/// A model value: exact, or a decimal approximation (printed with `?`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelValue {
    Exact(Rational),
    Approx(Rational),
    Opaque(String),
}

impl ModelValue {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            ModelValue::Exact(v) | ModelValue::Approx(v) => Some(v),
            ModelValue::Opaque(_) => None,
        }
    }
}

fn combine(a: ModelValue, b: ModelValue, f: impl Fn(Rational, Rational) -> Option<Rational>) -> ModelValue {
    let approx = matches!(a, ModelValue::Approx(_)) || matches!(b, ModelValue::Approx(_));
    match (a.value().cloned(), b.value().cloned()) {
        (Some(x), Some(y)) => match f(x, y) {
            Some(v) if approx => ModelValue::Approx(v),
            Some(v) => ModelValue::Exact(v),
            None => ModelValue::Opaque("division by zero".into()),
        },
        _ => ModelValue::Opaque("non-numeric operand".into()),
    }
}

pub fn eval_value(e: &Sexp) -> ModelValue {
    match e {
        Sexp::Atom(s) => {
            if let Some(body) = s.strip_suffix('?') {
                match parse_rational(body) {
                    Ok(v) => ModelValue::Approx(v),
                    Err(_) => ModelValue::Opaque(s.clone()),
                }
            } else {
                match parse_rational(s) {
                    Ok(v) => ModelValue::Exact(v),
                    Err(_) => ModelValue::Opaque(s.clone()),
                }
            }
        }
        Sexp::List(items) => {
            let Some(Sexp::Atom(head)) = items.first() else {
                return ModelValue::Opaque(format!("{e:?}"));
            };
            let args: Vec<ModelValue> = items[1..].iter().map(eval_value).collect();
            match (head.as_str(), args.len()) {
                ("-", 1) => match args.into_iter().next().unwrap() {
                    ModelValue::Exact(v) => ModelValue::Exact(-v),
                    ModelValue::Approx(v) => ModelValue::Approx(-v),
                    o => o,
                },
                ("/", 2) => {
                    let mut it = args.into_iter();
                    let (a, b) = (it.next().unwrap(), it.next().unwrap());
                    combine(a, b, |x, y| (!y.is_zero()).then(|| x / y))
                }
                ("+", _) | ("*", _) | ("-", _) if !args.is_empty() => {
                    let mut it = args.into_iter();
                    let mut acc = it.next().unwrap();
                    for b in it {
                        acc = match head.as_str() {
                            "+" => combine(acc, b, |x, y| Some(x + y)),
                            "*" => combine(acc, b, |x, y| Some(x * y)),
                            _ => combine(acc, b, |x, y| Some(x - y)),
                        };
                    }
                    acc
                }
                _ => ModelValue::Opaque(head.clone()),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat(HashMap<String, ModelValue>),
    Unsat,
    Unknown(String),
}

/// Reads the verdict and the `get-value` pairs from solver output.
pub fn parse_solver_output(text: &str) -> SolverAnswer {
    let sexps = parse_sexps(text);
    let mut verdict = None;
    let mut values = HashMap::new();
    let mut errors = Vec::new();
    for s in &sexps {
        match s {
            Sexp::Atom(a) if verdict.is_none() && (a == "sat" || a == "unsat" || a == "unknown") => {
                verdict = Some(a.clone());
            }
            Sexp::List(items) => {
                if let Some(Sexp::Atom(h)) = items.first() {
                    if h == "error" {
                        errors.push(format!("{:?}", items.get(1)));
                        continue;
                    }
                }
                for pair in items {
                    if let Sexp::List(kv) = pair {
                        if let [Sexp::Atom(name), value] = kv.as_slice() {
                            values.insert(name.clone(), eval_value(value));
                        }
                    }
                }
            }
            _ => {}
        }
    }
    match verdict.as_deref() {
        Some("sat") => SolverAnswer::Sat(values),
        Some("unsat") => SolverAnswer::Unsat,
        Some(_) => SolverAnswer::Unknown("solver answered unknown".into()),
        None if errors.is_empty() => SolverAnswer::Unknown("no verdict in solver output".into()),
        None => SolverAnswer::Unknown(format!("solver error: {}", errors.join("; "))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessError {
    Launch(String),
    Timeout,
}

/// Feeds `script` to the command's stdin and collects stdout, killing the
/// process if it outlives `timeout`.
pub fn run_solver_process(
    command: &[String],
    script: &str,
    timeout: Duration,
) -> Result<String, ProcessError> {
    let (prog, args) = command
        .split_first()
        .ok_or_else(|| ProcessError::Launch("empty solver command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| ProcessError::Launch(format!("{prog}: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = script.to_owned();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut out = String::new();
        let _ = stdout.read_to_string(&mut out);
        out
    });
    let deadline = Instant::now() + timeout;
    let mut timed_out = false;
    loop {
        match child.try_wait() {
            Ok(Some(_)) => break,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                timed_out = true;
                break;
            }
            Ok(None) => thread::sleep(Duration::from_millis(2)),
            Err(e) => return Err(ProcessError::Launch(e.to_string())),
        }
    }
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    if timed_out {
        Err(ProcessError::Timeout)
    } else {
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, ratio};

    #[test]
    fn parses_z3_style_models() {
        let out = "sat\n((x1_0 (/ 1.0 2.0))\n (t0_0 2.0)\n (t0_1 (- 1.0))\n (t0_2 (- (/ 3.0 4.0))))\n";
        let SolverAnswer::Sat(v) = parse_solver_output(out) else { panic!() };
        assert_eq!(v["x1_0"], ModelValue::Exact(ratio(1, 2)));
        assert_eq!(v["t0_0"], ModelValue::Exact(int(2)));
        assert_eq!(v["t0_1"], ModelValue::Exact(int(-1)));
        assert_eq!(v["t0_2"], ModelValue::Exact(ratio(-3, 4)));
    }

    #[test]
    fn approximate_and_algebraic_values() {
        let out = "sat\n((x 1.4142135623?) (y (root-obj (+ (^ x 2) (- 2)) 2)))";
        let SolverAnswer::Sat(v) = parse_solver_output(out) else { panic!() };
        assert!(matches!(v["x"], ModelValue::Approx(_)));
        assert!(matches!(v["y"], ModelValue::Opaque(_)));
    }

    #[test]
    fn verdicts() {
        assert_eq!(
            parse_solver_output("unsat\n(error \"line 9: model is not available\")"),
            SolverAnswer::Unsat
        );
        assert!(matches!(parse_solver_output("unknown"), SolverAnswer::Unknown(_)));
        assert!(matches!(parse_solver_output(""), SolverAnswer::Unknown(_)));
    }

    #[test]
    fn missing_binary_is_a_launch_error() {
        let cmd = vec!["/nonexistent/solver-binary".to_string()];
        assert!(matches!(
            run_solver_process(&cmd, "", Duration::from_secs(1)),
            Err(ProcessError::Launch(_))
        ));
    }

    #[test]
    fn slow_process_is_killed() {
        let cmd = vec!["sleep".to_string(), "5".to_string()];
        let t = Instant::now();
        assert_eq!(
            run_solver_process(&cmd, "", Duration::from_millis(100)),
            Err(ProcessError::Timeout)
        );
        assert!(t.elapsed() < Duration::from_secs(3));
    }
}
