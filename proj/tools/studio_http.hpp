#pragma once

#include <hdsa/hdsa.h>

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace hdsa_http {

// HTTP/JSON front of the studio sessions, built only on the C interface.
class StudioServer {
 public:
  StudioServer();
  ~StudioServer();
  StudioServer(const StudioServer&) = delete;
  StudioServer& operator=(const StudioServer&) = delete;

  // Binds to host:port (port 0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop() is called.
  bool listen();
  void stop();

 private:
  struct SessionHandle;
  std::shared_ptr<SessionHandle> find(const std::string& id);
  void register_routes();

  std::unique_ptr<httplib::Server> server_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<SessionHandle>> sessions_;
  std::atomic<unsigned long> next_id_{1};
};

int http_status_for(hdsa_status s);

}  // namespace hdsa_http
