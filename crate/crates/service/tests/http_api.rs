mod common;

use common::{policy_scenario, test_config, Auth, TestServer, PASSWORD};
use reqwest::{Method, StatusCode};
use serde_json::json;

#[tokio::test(flavor = "multi_thread")]
async fn alice_bob_jack_scenario() {
    let server = TestServer::start(test_config(None)).await;
    let d = policy_scenario(&server.client()).await;
    assert!(d.0.is_empty(), "{:#?}", d.0);
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn account_errors() {
    let server = TestServer::start(test_config(None)).await;
    let c = server.client();
    c.user("alice").await;

    let (s, v) = c.call(Method::POST, "/users", Auth::None, Some(json!({"username": "alice", "password": PASSWORD}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("username_taken")));
    let (s, v) = c.call(Method::POST, "/users", Auth::None, Some(json!({"username": "bob", "password": "x"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("weak_password")));

    let wrong = c.call(Method::POST, "/sessions", Auth::None, Some(json!({"username": "alice", "password": "wrong password"}))).await;
    let unknown = c.call(Method::POST, "/sessions", Auth::None, Some(json!({"username": "nobody", "password": PASSWORD}))).await;
    assert_eq!(wrong.0, StatusCode::UNAUTHORIZED);
    assert_eq!(wrong, unknown, "unknown user and wrong password must look the same");

    let (s, v) = c.call(Method::GET, "/lists?app_id=x", Auth::None, None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::UNAUTHORIZED, Some("invalid_session")));
    let (s, _) = c.call(Method::GET, "/lists?app_id=x", Auth::Bearer("deadbeef"), None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);

    let (s, v) = c.call(Method::POST, "/apps", Auth::None, Some(json!({"name": "  "}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("validation_error")));
    let (s, v) = c.call(Method::POST, "/users", Auth::None, Some(json!({"username": "carol"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("validation_error")));
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn duplicate_app_names_get_distinct_ids() {
    let server = TestServer::start(test_config(None)).await;
    let c = server.client();
    let (a, ka) = c.app("ChatApp").await;
    let (b, kb) = c.app("ChatApp").await;
    assert_ne!(a, b);
    assert_ne!(ka, kb);
    assert_eq!(ka.len(), 64);
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn filter_errors() {
    let server = TestServer::start(test_config(None)).await;
    let c = server.client();
    let (app, key) = c.app("ChatApp").await;
    let (alice, token) = c.user("alice").await;
    let body = json!({"sender": alice, "text": "hello", "scheme": {}});

    let (s, v) = c.call(Method::POST, "/filter", Auth::Key(&key), Some(body.clone())).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::FORBIDDEN, Some("permission_not_granted")));
    c.grant(&token, &app, false, true).await;
    let (s, _) = c.call(Method::POST, "/filter", Auth::Key(&key), Some(body.clone())).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    c.grant(&token, &app, true, true).await;
    let (s, _) = c.call(Method::POST, "/filter", Auth::Key(&key), Some(body.clone())).await;
    assert_eq!(s, StatusCode::OK);

    let (s, v) = c.call(Method::POST, "/filter", Auth::Key("00"), Some(body.clone())).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::UNAUTHORIZED, Some("unknown_api_key")));
    let (s, _) = c.call(Method::POST, "/filter", Auth::None, Some(body)).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);

    let big = "a".repeat((1 << 20) + 1);
    let (s, v) = c.call(Method::POST, "/filter", Auth::Key(&key), Some(json!({"sender": alice, "text": big}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::PAYLOAD_TOO_LARGE, Some("text_too_large")));

    let (s, v) = c.call(Method::POST, "/grants", Auth::Bearer(&token), Some(json!({"app_id": "nope", "allow_filtering": true, "allow_others_to_share_me": true}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_app")));
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn empty_text_and_numerals() {
    let server = TestServer::start(test_config(None)).await;
    let c = server.client();
    let (app, key) = c.app("ChatApp").await;
    let (alice, token) = c.user("alice").await;
    c.grant(&token, &app, true, true).await;

    let r = c.filter(&key, &alice, "", json!({})).await;
    assert_eq!(r["filtered_text"], "");
    assert_eq!(r["report"]["total_masked"], 0);
    assert_eq!(r["report"]["spans"], json!([]));

    let r = c.filter(&key, &alice, "room 12", json!({"categories": ["numerals"]})).await;
    assert_eq!(r["filtered_text"], "room [FILTERED]");
    assert_eq!(r["report"]["by_source"], json!({"NUMERAL": 1}));

    let r = c.filter(&key, &alice, "room 12", json!({"numerals": true, "placeholder": "#"})).await;
    assert_eq!(r["filtered_text"], "room #");
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn list_endpoints() {
    let server = TestServer::start(test_config(None)).await;
    let c = server.client();
    let (app, _) = c.app("ChatApp").await;
    let (alice, token) = c.user("alice").await;

    c.add(&token, &app, "srb", "Budapest").await;
    c.add(&token, &app, "SRB", "budapest").await;
    c.add(&token, &app, "SRW", "BUDAPEST").await;
    c.add(&token, &app, "ORB", "secret plan").await;

    let l = c.ok(Method::GET, &format!("/lists/SRB/terms?app_id={app}"), Auth::Bearer(&token), None).await;
    assert_eq!(l["owner"], alice.as_str());
    assert_eq!(l["kind"], "SRB");
    assert_eq!(l["terms"].as_array().unwrap().len(), 1, "{l}");

    let all = c.ok(Method::GET, &format!("/lists?app_id={app}"), Auth::Bearer(&token), None).await;
    assert_eq!(all["ORB"], json!(["secret plan"]));
    assert_eq!(all["conflicts"].as_array().unwrap().len(), 1);

    let body = json!({"app_id": app, "term": "BUDAPEST"});
    let l = c.ok(Method::DELETE, "/lists/SRB/terms", Auth::Bearer(&token), Some(body)).await;
    assert_eq!(l["terms"], json!([]));
    let all = c.ok(Method::GET, &format!("/lists?app_id={app}"), Auth::Bearer(&token), None).await;
    assert_eq!(all["conflicts"], json!([]));

    let (s, v) = c.call(Method::PUT, "/lists/XYZ/terms", Auth::Bearer(&token), Some(json!({"app_id": app, "term": "a"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("validation_error")));
    let (s, v) = c.call(Method::PUT, "/lists/SRB/terms", Auth::Bearer(&token), Some(json!({"app_id": app, "term": "   "}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_term")));
    let (s, v) = c.call(Method::PUT, "/lists/SRB/terms", Auth::Bearer(&token), Some(json!({"app_id": "missing", "term": "a"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_app")));
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn categories_listed() {
    let server = TestServer::start(test_config(None)).await;
    let v = server.client().ok(Method::GET, "/categories", Auth::None, None).await;
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), 6);
    assert!(ids.contains(&"names") && ids.contains(&"numerals"));
    let names = v.as_array().unwrap().iter().find(|c| c["id"] == "names").unwrap();
    assert_eq!(names["terms"], 800);
    server.stop().await;
}
