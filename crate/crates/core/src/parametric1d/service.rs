//! HTTP prediction endpoint over a trained parametric checkpoint:
//! `POST /predict` evaluates a batch of x locations for one parameter
//! set, `GET /health` reports liveness. UTF-8 JSON both ways; all
//! numbers 64-bit floats.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{predict, ParamPoint};
use crate::network::Checkpoint;

#[derive(Debug, Deserialize)]
pub struct PredictRequest {
    pub x: Vec<f64>,
    #[serde(rename = "T")]
    pub amplitude: f64,
    pub m: f64,
    pub sigma: f64,
}

#[derive(Debug, Serialize)]
pub struct PredictResponse {
    pub phi: Vec<f64>,
    pub extrapolated: bool,
}

/// Outcome of one request, independent of the transport.
pub enum Reply {
    Ok(String),
    BadRequest(String),
    NotFound,
}

/// Pure request handler: the served values come from exactly the same
/// code path as in-process prediction.
pub fn handle(checkpoint: &Checkpoint, method: &str, url: &str, body: &[u8]) -> Reply {
    match (method, url) {
        ("GET", "/health") => Reply::Ok(format!(
            "torsion-pinn {} parametric predictor\n",
            env!("CARGO_PKG_VERSION")
        )),
        ("POST", "/predict") => {
            let request: PredictRequest = match serde_json::from_slice(body) {
                Ok(req) => req,
                Err(e) => return Reply::BadRequest(format!("{{\"error\":{:?}}}", e.to_string())),
            };
            if request.sigma <= 0.0 {
                return Reply::BadRequest("{\"error\":\"sigma must be positive\"}".into());
            }
            let p = ParamPoint::new(request.amplitude, request.m, request.sigma);
            let (phi, extrapolated) = predict(checkpoint, &request.x, &p);
            let response = PredictResponse { phi, extrapolated };
            Reply::Ok(serde_json::to_string(&response).expect("serializable response"))
        }
        _ => Reply::NotFound,
    }
}

/// Serve until the process is interrupted (or the server is dropped).
/// Requests are answered concurrently against the shared immutable
/// checkpoint.
pub fn serve(server: tiny_http::Server, checkpoint: Arc<Checkpoint>, workers: usize) {
    let server = Arc::new(server);
    let mut handles = Vec::new();
    for _ in 0..workers.max(1) {
        let server = Arc::clone(&server);
        let checkpoint = Arc::clone(&checkpoint);
        handles.push(std::thread::spawn(move || loop {
            let mut request = match server.recv() {
                Ok(r) => r,
                Err(_) => return,
            };
            let mut body = Vec::new();
            let _ = std::io::Read::read_to_end(request.as_reader(), &mut body);
            let reply = handle(
                &checkpoint,
                request.method().as_str(),
                request.url(),
                &body,
            );
            let json = tiny_http::Header::from_bytes(
                &b"Content-Type"[..],
                &b"application/json; charset=utf-8"[..],
            )
            .expect("static header");
            let _ = match reply {
                Reply::Ok(text) => request.respond(
                    tiny_http::Response::from_string(text).with_header(json),
                ),
                Reply::BadRequest(text) => request.respond(
                    tiny_http::Response::from_string(text)
                        .with_status_code(400)
                        .with_header(json),
                ),
                Reply::NotFound => request
                    .respond(tiny_http::Response::from_string("not found\n").with_status_code(404)),
            };
        }));
    }
    for handle in handles {
        let _ = handle.join();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, NetworkSpec};
    use std::collections::BTreeMap;
    use std::io::{Read as _, Write as _};

    fn test_checkpoint() -> Checkpoint {
        let spec = NetworkSpec::new(4, vec![8, 8]).unwrap();
        let params = init_params(&spec, 5);
        Checkpoint {
            spec,
            params,
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn handler_round_trips_json() {
        let checkpoint = test_checkpoint();
        let body = br#"{"x":[0.0,0.5,1.0],"T":5.0,"m":0.7,"sigma":0.5}"#;
        match handle(&checkpoint, "POST", "/predict", body) {
            Reply::Ok(text) => {
                let response: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(response["phi"].as_array().unwrap().len(), 3);
                assert_eq!(response["extrapolated"], false);
            }
            _ => panic!("expected success"),
        }
    }

    #[test]
    fn handler_health_and_errors() {
        let checkpoint = test_checkpoint();
        assert!(matches!(
            handle(&checkpoint, "GET", "/health", b""),
            Reply::Ok(_)
        ));
        assert!(matches!(
            handle(&checkpoint, "POST", "/predict", b"not json"),
            Reply::BadRequest(_)
        ));
        assert!(matches!(
            handle(&checkpoint, "GET", "/nope", b""),
            Reply::NotFound
        ));
    }

    #[test]
    fn served_values_are_bit_equal_to_in_process_prediction() {
        let checkpoint = Arc::new(test_checkpoint());
        let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
        let addr = server.server_addr().to_ip().unwrap();
        let served = Arc::clone(&checkpoint);
        std::thread::spawn(move || serve(server, served, 2));

        let xs = [0.1, 0.35, 0.8];
        let p = ParamPoint::new(4.5, 0.6, 0.3);
        let (expected, _) = predict(&checkpoint, &xs, &p);

        let body = format!(
            "{{\"x\":[{},{},{}],\"T\":{},\"m\":{},\"sigma\":{}}}",
            xs[0], xs[1], xs[2], p.amplitude, p.mean, p.sigma
        );
        let mut stream = std::net::TcpStream::connect(addr).unwrap();
        write!(
            stream,
            "POST /predict HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            body.len(),
            body
        )
        .unwrap();
        let mut raw = String::new();
        stream.read_to_string(&mut raw).unwrap();
        let json_start = raw.find("\r\n\r\n").unwrap() + 4;
        let response: serde_json::Value = serde_json::from_str(&raw[json_start..]).unwrap();
        let phi: Vec<f64> = response["phi"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert_eq!(phi.len(), expected.len());
        for (a, b) in phi.iter().zip(&expected) {
            assert_eq!(a.to_bits(), b.to_bits(), "served {a} vs local {b}");
        }
    }
}
