//! TLS interception of CONNECT tunnels.
//!
//! With a user-supplied CA the proxy terminates the client's TLS session
//! using a leaf certificate minted for the tunnel's host, applies the same
//! blocking decision as for plain HTTP, and forwards allowed requests over a
//! fresh TLS connection to the origin.

use std::collections::HashMap;
use std::convert::Infallible;
use std::io;
use std::path::Path;
use std::sync::Arc;

use http_body_util::BodyExt;
use hyper::body::Incoming;
use hyper::http::uri::Authority;
use hyper::upgrade::Upgraded;
use hyper::{Request, Response, StatusCode, Uri};
use hyper_rustls::HttpsConnector;
use hyper_util::client::legacy::connect::HttpConnector;
use hyper_util::client::legacy::Client;
use hyper_util::rt::{TokioExecutor, TokioIo};
use parking_lot::Mutex;
use rcgen::{
    BasicConstraints, CertificateParams, DistinguishedName, DnType, IsCa, Issuer, KeyPair,
    KeyUsagePurpose,
};
use rustls::pki_types::pem::PemObject;
use rustls::pki_types::{CertificateDer, PrivateKeyDer};
use rustls::{ClientConfig, RootCertStore, ServerConfig};
use tokio_rustls::TlsAcceptor;
use url::Url;

use crate::proxy::{
    error_response, referer, request_info, strip_hop_by_hop, stub_response, Decision, ProxyBody,
    ProxyState,
};

/// Leaf configurations kept per host before the cache is reset.
const MAX_CACHED_HOSTS: usize = 4096;

fn invalid(msg: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

fn provider() -> Arc<rustls::crypto::CryptoProvider> {
    Arc::new(rustls::crypto::aws_lc_rs::default_provider())
}

/// Generate a self-signed interception CA. The returned PEM text holds the
/// private key followed by the certificate, the format [`Interceptor`] reads.
pub fn generate_ca(common_name: &str) -> io::Result<String> {
    let key = KeyPair::generate().map_err(invalid)?;
    let mut params = CertificateParams::new(Vec::<String>::new()).map_err(invalid)?;
    let mut dn = DistinguishedName::new();
    dn.push(DnType::CommonName, common_name);
    params.distinguished_name = dn;
    params.is_ca = IsCa::Ca(BasicConstraints::Unconstrained);
    params.key_usages = vec![KeyUsagePurpose::KeyCertSign, KeyUsagePurpose::CrlSign];
    let cert = params.self_signed(&key).map_err(invalid)?;
    Ok(format!("{}{}", key.serialize_pem(), cert.pem()))
}

/// Mint a certificate for `host` signed by the CA in `ca_pem`. Returns the
/// key and certificate as one PEM string. Used to stand up test origins.
pub fn issue_leaf(ca_pem: &str, host: &str) -> io::Result<String> {
    let (issuer, _) = load_ca(ca_pem)?;
    let key = KeyPair::generate().map_err(invalid)?;
    let cert = CertificateParams::new(vec![host.to_string()])
        .map_err(invalid)?
        .signed_by(&key, &issuer)
        .map_err(invalid)?;
    Ok(format!("{}{}", key.serialize_pem(), cert.pem()))
}

fn load_ca(pem: &str) -> io::Result<(Issuer<'static, KeyPair>, CertificateDer<'static>)> {
    let cert = CertificateDer::pem_slice_iter(pem.as_bytes())
        .next()
        .ok_or_else(|| invalid("CA file has no CERTIFICATE block"))?
        .map_err(invalid)?;
    let key = PrivateKeyDer::from_pem_slice(pem.as_bytes())
        .map_err(|e| invalid(format!("CA private key: {e}")))?;
    let key = KeyPair::try_from(&key).map_err(invalid)?;
    let issuer = Issuer::from_ca_cert_der(&cert, key).map_err(invalid)?;
    Ok((issuer, cert))
}

/// Build a rustls server configuration from a PEM holding a key and its
/// certificate chain.
pub fn server_config_from_pem(pem: &str) -> io::Result<ServerConfig> {
    let chain = CertificateDer::pem_slice_iter(pem.as_bytes())
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let key = PrivateKeyDer::from_pem_slice(pem.as_bytes()).map_err(invalid)?;
    let mut cfg = ServerConfig::builder_with_provider(provider())
        .with_safe_default_protocol_versions()
        .map_err(invalid)?
        .with_no_client_auth()
        .with_single_cert(chain, key)
        .map_err(invalid)?;
    cfg.alpn_protocols = vec![b"http/1.1".to_vec()];
    Ok(cfg)
}

pub struct Interceptor {
    issuer: Issuer<'static, KeyPair>,
    ca_der: CertificateDer<'static>,
    leaf_configs: Mutex<HashMap<String, Arc<ServerConfig>>>,
    upstream: Client<HttpsConnector<HttpConnector>, Incoming>,
}

impl Interceptor {
    /// `ca_pem` holds the CA certificate and key; `upstream_roots_pem`, if
    /// given, adds trusted roots for origin connections.
    pub fn from_pem(ca_pem: &str, upstream_roots_pem: Option<&str>) -> io::Result<Interceptor> {
        let (issuer, ca_der) = load_ca(ca_pem)?;
        let mut roots = RootCertStore {
            roots: webpki_roots::TLS_SERVER_ROOTS.to_vec(),
        };
        if let Some(pem) = upstream_roots_pem {
            for cert in CertificateDer::pem_slice_iter(pem.as_bytes()) {
                roots.add(cert.map_err(invalid)?).map_err(invalid)?;
            }
        }
        let tls = ClientConfig::builder_with_provider(provider())
            .with_safe_default_protocol_versions()
            .map_err(invalid)?
            .with_root_certificates(roots)
            .with_no_client_auth();
        let mut http = HttpConnector::new();
        http.enforce_http(false);
        http.set_connect_timeout(Some(crate::fetch::CONNECT_TIMEOUT));
        let connector = hyper_rustls::HttpsConnectorBuilder::new()
            .with_tls_config(tls)
            .https_only()
            .enable_http1()
            .wrap_connector(http);
        Ok(Interceptor {
            issuer,
            ca_der,
            leaf_configs: Mutex::new(HashMap::new()),
            upstream: Client::builder(TokioExecutor::new()).build(connector),
        })
    }

    pub fn from_files(ca: &Path, upstream_roots: Option<&Path>) -> io::Result<Interceptor> {
        let ca_pem = std::fs::read_to_string(ca)?;
        let roots = upstream_roots.map(std::fs::read_to_string).transpose()?;
        Self::from_pem(&ca_pem, roots.as_deref())
    }

    fn leaf_config(&self, host: &str) -> io::Result<Arc<ServerConfig>> {
        if let Some(cfg) = self.leaf_configs.lock().get(host) {
            return Ok(cfg.clone());
        }
        let key = KeyPair::generate().map_err(invalid)?;
        let cert = CertificateParams::new(vec![host.to_string()])
            .map_err(invalid)?
            .signed_by(&key, &self.issuer)
            .map_err(invalid)?;
        let key_der = PrivateKeyDer::try_from(key.serialize_der()).map_err(invalid)?;
        let mut cfg = ServerConfig::builder_with_provider(provider())
            .with_safe_default_protocol_versions()
            .map_err(invalid)?
            .with_no_client_auth()
            .with_single_cert(vec![cert.der().clone(), self.ca_der.clone()], key_der)
            .map_err(invalid)?;
        cfg.alpn_protocols = vec![b"http/1.1".to_vec()];
        let cfg = Arc::new(cfg);
        let mut cache = self.leaf_configs.lock();
        if cache.len() >= MAX_CACHED_HOSTS {
            cache.clear();
        }
        cache.insert(host.to_string(), cfg.clone());
        Ok(cfg)
    }

    /// Serve one tunnel: terminate TLS, then judge and forward each request.
    pub(crate) async fn intercept(
        self: Arc<Self>,
        state: Arc<ProxyState>,
        client: TokioIo<Upgraded>,
        authority: Authority,
    ) {
        let cfg = match self.leaf_config(authority.host()) {
            Ok(c) => c,
            Err(e) => {
                tracing::warn!(%authority, error = %e, "could not mint leaf certificate");
                return;
            }
        };
        let tls = match TlsAcceptor::from(cfg).accept(client).await {
            Ok(t) => t,
            Err(e) => {
                tracing::debug!(%authority, error = %e, "client TLS handshake failed");
                return;
            }
        };
        let svc = hyper::service::service_fn(move |req| {
            let (this, state, authority) = (self.clone(), state.clone(), authority.clone());
            async move { Ok::<_, Infallible>(this.forward(&state, &authority, req).await) }
        });
        if let Err(e) = hyper::server::conn::http1::Builder::new()
            .serve_connection(TokioIo::new(tls), svc)
            .await
        {
            tracing::debug!(error = %e, "intercepted connection error");
        }
    }

    async fn forward(
        &self,
        state: &ProxyState,
        authority: &Authority,
        req: Request<Incoming>,
    ) -> Response<ProxyBody> {
        let path = req.uri().path_and_query().map_or("/", |p| p.as_str());
        let target = format!("https://{authority}{path}");
        let (Ok(url), Ok(uri)) = (Url::parse(&target), target.parse::<Uri>()) else {
            return error_response(StatusCode::BAD_REQUEST, "unparseable request target");
        };
        let info = request_info(req.method(), url, req.headers());
        if let Decision::Block(cat) = state.judge(&info, referer(req.headers()).as_deref()) {
            return stub_response(cat);
        }
        let (mut parts, body) = req.into_parts();
        strip_hop_by_hop(&mut parts.headers);
        parts.uri = uri;
        match self
            .upstream
            .request(Request::from_parts(parts, body))
            .await
        {
            Ok(resp) => {
                let (mut parts, body) = resp.into_parts();
                strip_hop_by_hop(&mut parts.headers);
                state.learn_size(&info, &parts.headers);
                Response::from_parts(parts, body.boxed())
            }
            Err(e) => {
                tracing::debug!(url = %info.url, error = %e, "upstream TLS request failed");
                error_response(StatusCode::BAD_GATEWAY, "upstream request failed")
            }
        }
    }
}
