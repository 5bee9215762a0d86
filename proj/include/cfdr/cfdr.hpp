#pragma once

// Umbrella header for the cloud flight-data-recorder library.

#include "cfdr/arbitrator.hpp"
#include "cfdr/bytes.hpp"
#include "cfdr/crypto.hpp"
#include "cfdr/errors.hpp"
#include "cfdr/ledger.hpp"
#include "cfdr/payload.hpp"
#include "cfdr/protocol.hpp"
#include "cfdr/rational.hpp"
#include "cfdr/report.hpp"
#include "cfdr/scenario.hpp"
#include "cfdr/sla.hpp"
#include "cfdr/verdict.hpp"
