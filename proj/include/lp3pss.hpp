#pragma once

#include "lp3pss/attacks.hpp"
#include "lp3pss/bytes.hpp"
#include "lp3pss/config.hpp"
#include "lp3pss/conformance.hpp"
#include "lp3pss/crypto.hpp"
#include "lp3pss/entities.hpp"
#include "lp3pss/errors.hpp"
#include "lp3pss/fusion.hpp"
#include "lp3pss/ids.hpp"
#include "lp3pss/messages.hpp"
#include "lp3pss/observability.hpp"
#include "lp3pss/report.hpp"
#include "lp3pss/scenario.hpp"
#include "lp3pss/session.hpp"
#include "lp3pss/simulation.hpp"
#include "lp3pss/transcript.hpp"
