#ifndef UIVNAV__SERVER_HPP_
#define UIVNAV__SERVER_HPP_

#include <memory>
#include <string>

#include "json.hpp"
#include "uivnav/config.hpp"

namespace httplib
{
class Server;
}

namespace uivnav
{

struct ServerOptions
{
  std::string static_dir;   // UI bundle; empty disables static serving
  std::string export_root = ".";
  std::size_t max_sessions = 64;
  int replay_steps = 200;   // recorded expert steps for replay sessions
};

/// HTTP facade for the labeling UI.
///
///   POST   /sessions                 {scenario, seed, mode: label|teleop|replay}
///   GET    /sessions/{id}/frame      JSON with the I_DS PNG as base64
///   GET    /sessions/{id}/frame.png
///   POST   /sessions/{id}/label      {c_yaw, c_pitch, step?}      label/replay
///   POST   /sessions/{id}/action     {c_yaw, c_pitch, record?}    teleop
///   POST   /sessions/{id}/export     {path?}
///   GET    /sessions/{id}/stats
///   DELETE /sessions/{id}
///   GET    /config
///
/// Errors are {code, message} with 400 (bad input), 404 (unknown session),
/// 409 (wrong mode, step already labeled, finished episode, empty export)
/// and 429 (session limit). Label clients only ever see the composite image.
class LabelServer
{
public:
  LabelServer(RunConfig config, ServerOptions options);
  ~LabelServer();
  LabelServer(const LabelServer &) = delete;
  LabelServer & operator=(const LabelServer &) = delete;

  /// Binds and serves until stop(). Returns false if the bind failed.
  bool listen(const std::string & host, int port);
  /// Binds to an ephemeral port and returns it (-1 on failure); call
  /// listen_after_bind() to serve.
  int bind_any_port(const std::string & host);
  bool listen_after_bind();
  void stop();
  bool is_running() const;
  void wait_until_ready() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace uivnav

#endif  // UIVNAV__SERVER_HPP_
