#pragma once

// Umbrella header. Pull in individual headers instead when compile time
// matters; http_server.hpp and http_clients.hpp stay separate because they
// drag in the HTTP stack.

#include "forge/agentloop.hpp"
#include "forge/bm25.hpp"
#include "forge/cachestore.hpp"
#include "forge/config.hpp"
#include "forge/evalcli.hpp"
#include "forge/fakes.hpp"
#include "forge/fixtures.hpp"
#include "forge/gateway.hpp"
#include "forge/result.hpp"
#include "forge/rlmath.hpp"
#include "forge/snippetpipe.hpp"
#include "forge/synth.hpp"
#include "forge/textseg.hpp"
#include "forge/toolserver.hpp"
