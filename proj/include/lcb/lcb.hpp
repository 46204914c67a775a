#pragma once

// Umbrella header.
#include "lcb/config.hpp"
#include "lcb/data.hpp"
#include "lcb/divide.hpp"
#include "lcb/haug.hpp"
#include "lcb/harness.hpp"
#include "lcb/loss_model.hpp"
#include "lcb/metrics.hpp"
#include "lcb/mixer.hpp"
#include "lcb/net.hpp"
#include "lcb/noise.hpp"
#include "lcb/reco.hpp"
#include "lcb/trainer.hpp"
#include "lcb/version.hpp"
