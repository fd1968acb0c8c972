use std::io;

use canteen_core::session::{
    ClientMessage, ErrorCode, Occupant, ProtocolError, ServerMessage, SessionId,
};
use futures::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_util::bytes::Bytes;
use tokio_util::codec::{Framed, LengthDelimitedCodec};

use crate::AppState;

/// Largest accepted frame. Real messages are a few hundred bytes.
pub const MAX_FRAME_BYTES: usize = 64 * 1024;

/// 4-byte big-endian length prefix followed by a UTF-8 JSON body.
pub fn frame_codec() -> LengthDelimitedCodec {
    LengthDelimitedCodec::builder()
        .max_frame_length(MAX_FRAME_BYTES)
        .new_codec()
}

type Conn = Framed<TcpStream, LengthDelimitedCodec>;

pub async fn serve_tcp(listener: TcpListener, state: AppState) -> io::Result<()> {
    loop {
        let (stream, peer) = listener.accept().await?;
        let state = state.clone();
        tokio::spawn(async move {
            if let Err(e) = handle_connection(stream, state).await {
                tracing::debug!(%peer, "connection closed: {e}");
            }
        });
    }
}

async fn send(conn: &mut Conn, msg: &ServerMessage) -> io::Result<()> {
    let body = serde_json::to_vec(msg).expect("server messages serialize");
    conn.send(Bytes::from(body)).await
}

fn parse(frame: &[u8]) -> Result<ClientMessage, ProtocolError> {
    serde_json::from_slice(frame)
        .map_err(|e| ProtocolError::new(ErrorCode::InvalidMessage, e.to_string()))
}

async fn flush(conn: &mut Conn, state: &AppState, id: SessionId, seat: u8) -> io::Result<()> {
    let msgs = state.service.take_messages(id, seat).unwrap_or_default();
    for m in &msgs {
        send(conn, m).await?;
    }
    Ok(())
}

/// Reads frames until a join succeeds. `None` means the peer went away.
async fn await_join(
    conn: &mut Conn,
    state: &AppState,
) -> io::Result<Option<(SessionId, u8, String)>> {
    while let Some(frame) = conn.next().await {
        let err = match parse(&frame?) {
            Ok(ClientMessage::Join {
                session,
                seat,
                token,
            }) => {
                match state
                    .service
                    .join(session, seat, Occupant::human(token.clone()), state.now())
                {
                    Ok(()) => return Ok(Some((session, seat, token))),
                    Err(e) => e,
                }
            }
            Ok(_) => {
                ProtocolError::new(ErrorCode::InvalidMessage, "the first message must be join")
            }
            Err(e) => e,
        };
        send(conn, &err.to_message()).await?;
    }
    Ok(None)
}

async fn handle_connection(stream: TcpStream, state: AppState) -> io::Result<()> {
    let mut conn = Framed::new(stream, frame_codec());
    let Some((id, seat, token)) = await_join(&mut conn, &state).await? else {
        return Ok(());
    };
    let result = serve_seat(&mut conn, &state, id, seat, &token).await;
    let _ = state.service.disconnect(id, seat);
    result
}

async fn serve_seat(
    conn: &mut Conn,
    state: &AppState,
    id: SessionId,
    seat: u8,
    token: &str,
) -> io::Result<()> {
    flush(conn, state, id, seat).await?;
    let mut tick = tokio::time::interval(state.flush_every);
    loop {
        tokio::select! {
            frame = conn.next() => {
                let Some(frame) = frame else { return Ok(()) };
                let outcome = parse(&frame?).and_then(|msg| state.service.handle(id, seat, token, msg, state.now()));
                // Anything the submission queued happened before the error.
                flush(conn, state, id, seat).await?;
                if let Err(e) = outcome {
                    send(conn, &e.to_message()).await?;
                }
            }
            _ = tick.tick() => {
                let _ = state.service.advance(id, state.now());
                flush(conn, state, id, seat).await?;
            }
        }
    }
}
