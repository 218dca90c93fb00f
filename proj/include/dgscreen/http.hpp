#pragma once

// HTTP front end of the screening service.
//
//   POST /sessions                 session document -> {"session_id"}
//   POST /sessions/{id}/screen     -> ScreeningResult
//   GET  /sessions/{id}/result     -> ScreeningResult
//   PUT  /admin/model              model document -> {"model_version"}
//   PUT  /admin/calibration        calibration document
//   GET  /health                   -> status (503 until ready)

namespace httplib {
class Server;
}

namespace dgscreen {

class ScreeningService;

void register_routes(httplib::Server& server, ScreeningService& service);

}  // namespace dgscreen
