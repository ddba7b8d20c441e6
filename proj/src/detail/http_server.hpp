#pragma once

#include <httplib.h>

#include <sys/socket.h>

namespace zoo::detail {

/// SO_REUSEADDR only. httplib's default also sets SO_REUSEPORT, which would
/// let a second server silently share a port that is already taken.
inline void exclusive_port(httplib::Server& server) {
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
}

}  // namespace zoo::detail
