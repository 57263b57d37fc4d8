/** The transport questionnaire's option grid and form state.
 *
 * Each transport family exposes exactly four occupancy buckets; the
 * codes are what the server validates, the labels are what the form
 * shows. Switching family clears any previously chosen bucket so a
 * stale option can never ride along into the payload.
 */

import type { TransportBody } from "./types.js";

export interface BucketOption {
  code: string;
  label: string;
}

export interface TransportFamily {
  code: string;
  label: string;
  buckets: readonly BucketOption[];
}

const CAR_BUCKETS: readonly BucketOption[] = [
  { code: "0", label: "0" },
  { code: "1", label: "1" },
  { code: "2", label: "2" },
  { code: ">2", label: "more than 2" },
];

const BUS_BUCKETS: readonly BucketOption[] = [
  { code: "<10", label: "less than 10" },
  { code: "10-20", label: "10 to 20" },
  { code: "20-30", label: "20 to 30" },
  { code: ">30", label: "more than 30" },
];

const BOAT_BUCKETS: readonly BucketOption[] = [
  { code: "<10", label: "less than 10" },
  { code: "10-30", label: "10 to 30" },
  { code: "30-50", label: "30 to 50" },
  { code: ">50", label: "more than 50" },
];

export const TRANSPORT_GRID: readonly TransportFamily[] = [
  { code: "own_car", label: "Own car", buckets: CAR_BUCKETS },
  { code: "friend_vehicle", label: "Friend or family vehicle", buckets: CAR_BUCKETS },
  { code: "taxi_tvde", label: "Taxi / TVDE", buckets: CAR_BUCKETS },
  { code: "bus", label: "Bus", buckets: BUS_BUCKETS },
  { code: "subway_train_tram", label: "Subway / train / tram", buckets: BUS_BUCKETS },
  { code: "boat", label: "Boat", buckets: BOAT_BUCKETS },
];

export function familyOf(transport: string): TransportFamily | undefined {
  return TRANSPORT_GRID.find((f) => f.code === transport);
}

export function bucketsFor(transport: string): readonly BucketOption[] {
  return familyOf(transport)?.buckets ?? [];
}

export function isOnGrid(transport: string, bucket: string): boolean {
  return bucketsFor(transport).some((b) => b.code === bucket);
}

export interface TransportFormState {
  tripId: string;
  transport: string | null;
  bucket: string | null;
}

export function emptyTransportForm(tripId: string): TransportFormState {
  return { tripId, transport: null, bucket: null };
}

/** Selecting a different family resets the bucket; re-selecting the
 * current one keeps it. */
export function selectTransport(
  state: TransportFormState,
  transport: string,
): TransportFormState {
  if (familyOf(transport) === undefined) {
    throw new RangeError(`unknown transport family ${transport}`);
  }
  if (state.transport === transport) {
    return state;
  }
  return { ...state, transport, bucket: null };
}

export function selectBucket(
  state: TransportFormState,
  bucket: string,
): TransportFormState {
  if (state.transport === null) {
    throw new RangeError("choose a transport family first");
  }
  if (!isOnGrid(state.transport, bucket)) {
    throw new RangeError(
      `bucket ${bucket} is not offered for ${state.transport}`,
    );
  }
  return { ...state, bucket };
}

export function canSubmitTransport(state: TransportFormState): boolean {
  return (
    state.transport !== null &&
    state.bucket !== null &&
    isOnGrid(state.transport, state.bucket)
  );
}

/** Build the POST body; refuses anything the form would not allow. */
export function transportPayload(state: TransportFormState): TransportBody {
  if (!canSubmitTransport(state) || state.transport === null || state.bucket === null) {
    throw new RangeError("transport form is incomplete");
  }
  return {
    kind: "transport",
    transport: state.transport,
    people_bucket: state.bucket,
    trip_id: state.tripId,
  };
}
