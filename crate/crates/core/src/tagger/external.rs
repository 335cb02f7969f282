//! A tagger living in another process, spoken to with newline-delimited
//! JSON over stdio or TCP.
//!
//! ```text
//! -> {"hello":{"vocab_sha256":"<hex>"}}
//! <- {"hello":{"vocab_sha256":"<hex>"}}
//! -> {"id":0,"sentences":[["$START","he","also"]]}
//! <- {"id":0,"predictions":[{"detect":[..],"dist":[[..],..]}]}
//! ```
//!
//! Each side sends the SHA-256 of its vocabulary file; a mismatch ends the
//! session. A server may answer a request with `{"id":n,"error":"..."}`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{TagPrediction, TaggerBackend};
use crate::{Error, Result, TagVocabulary, TokenSeq};

#[derive(Serialize, Deserialize)]
struct Hello {
    hello: HelloBody,
}

#[derive(Serialize, Deserialize)]
struct HelloBody {
    vocab_sha256: String,
}

#[derive(Serialize, Deserialize)]
struct Request {
    id: u64,
    sentences: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct Response {
    id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predictions: Option<Vec<TagPrediction>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    next_id: u64,
    broken: bool,
}

impl Connection {
    fn send<T: Serialize>(&mut self, msg: &T) -> Result<()> {
        let mut line = serde_json::to_vec(msg).expect("protocol messages serialize");
        line.push(b'\n');
        self.writer
            .write_all(&line)
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::PeerUnavailable(format!("write failed: {e}")))
    }

    fn recv(&mut self) -> Result<String> {
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) => Err(Error::PeerUnavailable("peer closed the connection".into())),
            Ok(_) => Ok(line),
            Err(e) => Err(Error::PeerUnavailable(format!("read failed: {e}"))),
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Client side. Requests on one client are serialized; open several
/// clients to pool connections.
pub struct ExternalBackend {
    conn: Mutex<Connection>,
    vocab_len: usize,
}

impl ExternalBackend {
    /// Starts `program` and speaks the protocol over its stdin/stdout.
    pub fn spawn(program: &str, args: &[String], vocab: &TagVocabulary) -> Result<ExternalBackend> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::PeerUnavailable(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        ExternalBackend::handshake(
            Connection {
                reader: Box::new(BufReader::new(stdout)),
                writer: Box::new(BufWriter::new(stdin)),
                child: Some(child),
                next_id: 0,
                broken: false,
            },
            vocab,
        )
    }

    pub fn connect<A: ToSocketAddrs>(addr: A, vocab: &TagVocabulary) -> Result<ExternalBackend> {
        let stream =
            TcpStream::connect(addr).map_err(|e| Error::PeerUnavailable(format!("connect: {e}")))?;
        let read_half = stream
            .try_clone()
            .map_err(|e| Error::PeerUnavailable(format!("connect: {e}")))?;
        ExternalBackend::from_streams(BufReader::new(read_half), BufWriter::new(stream), vocab)
    }

    /// Uses an already open pair of streams.
    pub fn from_streams<R, W>(reader: R, writer: W, vocab: &TagVocabulary) -> Result<ExternalBackend>
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        ExternalBackend::handshake(
            Connection {
                reader: Box::new(reader),
                writer: Box::new(writer),
                child: None,
                next_id: 0,
                broken: false,
            },
            vocab,
        )
    }

    fn handshake(mut conn: Connection, vocab: &TagVocabulary) -> Result<ExternalBackend> {
        let ours = vocab.sha256();
        conn.send(&Hello { hello: HelloBody { vocab_sha256: ours.clone() } })?;
        let line = conn.recv()?;
        let theirs: Hello = serde_json::from_str(&line)
            .map_err(|e| Error::Protocol(format!("bad hello from peer: {e}")))?;
        if theirs.hello.vocab_sha256 != ours {
            return Err(Error::Protocol(format!(
                "vocabulary mismatch: ours {ours}, peer {}",
                theirs.hello.vocab_sha256
            )));
        }
        Ok(ExternalBackend {
            conn: Mutex::new(conn),
            vocab_len: vocab.len(),
        })
    }

    fn exchange(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if conn.broken {
            return Err(Error::PeerUnavailable("connection is out of sync".into()));
        }
        let id = conn.next_id;
        conn.next_id += 1;
        let request = Request {
            id,
            sentences: batch.iter().map(TokenSeq::to_wire).collect(),
        };
        let reply = conn.send(&request).and_then(|_| conn.recv());
        let line = match reply {
            Ok(line) => line,
            Err(e) => {
                conn.broken = true;
                return Err(e);
            }
        };
        let response: Response = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                conn.broken = true;
                return Err(Error::Protocol(format!("malformed response: {e}")));
            }
        };
        if response.id != id {
            conn.broken = true;
            return Err(Error::Protocol(format!(
                "response id {} does not answer request {id}",
                response.id
            )));
        }
        drop(conn);
        if let Some(msg) = response.error {
            return Err(Error::Protocol(format!("peer error: {msg}")));
        }
        let predictions = response
            .predictions
            .ok_or_else(|| Error::Protocol("response has neither predictions nor error".into()))?;
        if predictions.len() != batch.len() {
            return Err(Error::Protocol(format!(
                "{} predictions for {} sentences",
                predictions.len(),
                batch.len()
            )));
        }
        for (p, seq) in predictions.iter().zip(batch) {
            p.validate(seq.len(), self.vocab_len).map_err(|e| match e {
                Error::ShapeMismatch(m) => Error::Protocol(m),
                other => other,
            })?;
        }
        Ok(predictions)
    }
}

impl TaggerBackend for ExternalBackend {
    fn predict_batch(&self, batch: &[TokenSeq]) -> Result<Vec<TagPrediction>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        self.exchange(batch)
    }
}

/// Serves `backend` on a stream pair until the client hangs up.
///
/// A client with a different vocabulary gets our hello and then
/// [`Error::Protocol`] is returned. Failing requests are answered with an
/// error message and do not end the session.
pub fn serve<R: BufRead, W: Write>(
    mut reader: R,
    mut writer: W,
    backend: &dyn TaggerBackend,
    vocab: &TagVocabulary,
) -> Result<()> {
    let ours = vocab.sha256();
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(());
    }
    let hello: Hello = serde_json::from_str(&line)
        .map_err(|e| Error::Protocol(format!("expected hello: {e}")))?;
    write_line(&mut writer, &Hello { hello: HelloBody { vocab_sha256: ours.clone() } })?;
    if hello.hello.vocab_sha256 != ours {
        return Err(Error::Protocol("client uses a different vocabulary".into()));
    }

    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => return Err(Error::Protocol(format!("malformed request: {e}"))),
        };
        let result = request
            .sentences
            .iter()
            .map(|s| TokenSeq::from_wire(s))
            .collect::<Result<Vec<_>>>()
            .and_then(|batch| backend.predict_batch(&batch));
        let response = match result {
            Ok(predictions) => Response { id: request.id, predictions: Some(predictions), error: None },
            Err(e) => Response { id: request.id, predictions: None, error: Some(e.to_string()) },
        };
        write_line(&mut writer, &response)?;
    }
}

fn write_line<W: Write, T: Serialize>(w: &mut W, msg: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, msg).map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::OracleBackend;
    use crate::{build_vocab, tokenize};
    use std::net::TcpListener;
    use std::thread;

    fn vocab() -> TagVocabulary {
        build_vocab([Ok((tokenize("a b"), tokenize("a x")))], 10).unwrap()
    }

    /// A TCP peer running `script` on the server side of one connection.
    fn peer<F>(script: F) -> std::net::SocketAddr
    where
        F: FnOnce(BufReader<TcpStream>, TcpStream) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            script(BufReader::new(stream.try_clone().unwrap()), stream);
        });
        addr
    }

    fn scripted(replies: Vec<String>) -> std::net::SocketAddr {
        let sha = vocab().sha256();
        peer(move |mut r, mut w| {
            let mut line = String::new();
            r.read_line(&mut line).unwrap();
            writeln!(w, "{{\"hello\":{{\"vocab_sha256\":\"{sha}\"}}}}").unwrap();
            for reply in replies {
                line.clear();
                if r.read_line(&mut line).unwrap() == 0 {
                    return;
                }
                writeln!(w, "{reply}").unwrap();
            }
        })
    }

    #[test]
    fn roundtrip_through_serve() {
        let v = vocab();
        let oracle = OracleBackend::new([(tokenize("a b"), tokenize("a x"))], v.clone());
        let sv = v.clone();
        let addr = peer(move |r, w| serve(r, w, &oracle, &sv).unwrap());
        let client = ExternalBackend::connect(addr, &v).unwrap();
        let batch = [tokenize("a b"), tokenize("c")];
        let out = client.predict_batch(&batch).unwrap();
        assert_eq!(out[0].argmax_ids()[..2], [0, 0]);
        assert_ne!(out[0].argmax_ids()[2], 0);
        assert_eq!(out[1].argmax_ids(), [0, 0]);
        assert!(client.predict_batch(&[]).unwrap().is_empty());
        assert_eq!(client.predict(&tokenize("a b")).unwrap(), out[0]);
    }

    #[test]
    fn identity_answer() {
        let addr = scripted(vec![
            r#"{"id":0,"predictions":[{"detect":[0,0],"dist":[[1,0,0],[1,0,0]]}]}"#.into(),
        ]);
        let client = ExternalBackend::connect(addr, &vocab()).unwrap();
        let out = client.predict_batch(&[tokenize("a")]).unwrap();
        assert_eq!(out[0].argmax_ids(), [0, 0]);
    }

    #[test]
    fn short_batch_is_protocol_error() {
        let addr = scripted(vec![
            r#"{"id":0,"predictions":[{"detect":[0,0],"dist":[[1,0,0],[1,0,0]]}]}"#.into(),
        ]);
        let client = ExternalBackend::connect(addr, &vocab()).unwrap();
        let err = client.predict_batch(&[tokenize("a"), tokenize("b")]).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "{err}");
    }

    #[test]
    fn half_row_is_invariant_violation() {
        let addr = scripted(vec![
            r#"{"id":0,"predictions":[{"detect":[0,0],"dist":[[1,0,0],[0.25,0.25,0]]}]}"#.into(),
        ]);
        let client = ExternalBackend::connect(addr, &vocab()).unwrap();
        let err = client.predict_batch(&[tokenize("a")]).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)), "{err}");
    }

    #[test]
    fn bad_shapes_ids_and_garbage() {
        let addr = scripted(vec![
            r#"{"id":0,"predictions":[{"detect":[0],"dist":[[1,0,0]]}]}"#.into(),
            r#"{"id":1,"error":"boom"}"#.into(),
            r#"{"id":7,"predictions":[]}"#.into(),
        ]);
        let client = ExternalBackend::connect(addr, &vocab()).unwrap();
        let a = [tokenize("a")];
        assert!(matches!(client.predict_batch(&a), Err(Error::Protocol(_))));
        assert!(matches!(client.predict_batch(&a), Err(Error::Protocol(m)) if m.contains("boom")));
        assert!(matches!(client.predict_batch(&a), Err(Error::Protocol(_))));
        // Out of sync after a mismatched id.
        assert!(matches!(client.predict_batch(&a), Err(Error::PeerUnavailable(_))));

        let addr = scripted(vec!["not json".into()]);
        let client = ExternalBackend::connect(addr, &vocab()).unwrap();
        assert!(matches!(client.predict_batch(&a), Err(Error::Protocol(_))));
    }

    #[test]
    fn hangup_is_peer_unavailable() {
        let addr = scripted(vec![]);
        let client = ExternalBackend::connect(addr, &vocab()).unwrap();
        assert!(matches!(
            client.predict_batch(&[tokenize("a")]),
            Err(Error::PeerUnavailable(_))
        ));
        assert!(matches!(
            ExternalBackend::spawn("/nonexistent/tagger", &[], &vocab()),
            Err(Error::PeerUnavailable(_))
        ));
    }

    #[test]
    fn vocabulary_mismatch() {
        let v = vocab();
        let other = TagVocabulary::minimal();
        let oracle = OracleBackend::new([], v.clone());
        let addr = peer(move |r, w| {
            assert!(matches!(serve(r, w, &oracle, &v), Err(Error::Protocol(_))));
        });
        assert!(matches!(ExternalBackend::connect(addr, &other), Err(Error::Protocol(_))));
    }
}
