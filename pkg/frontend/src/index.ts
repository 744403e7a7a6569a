export * as protocol from "./protocol.js";
export {
  Envelope,
  DecodeError,
  canonicalJson,
  encodeFrame,
  encodeFrameBytes,
  decodeFrame,
  decodeStream,
  envelopeFromObject,
} from "./protocol.js";
export {
  Doc,
  DocOp,
  ItemId,
  Anchor,
  Bias,
  BEFORE,
  AFTER,
  MarkSpan,
  AppliedReport,
  MalformedOpError,
  opToWire,
  opFromWire,
  anchorToWire,
  anchorFromWire,
} from "./crdt.js";
export { AdminClient, ApiError, LoginResult, TrialInfo, TrialMember } from "./client.js";
export {
  ClientSession,
  SessionOptions,
  WebSocketLike,
  SocketFactory,
  ConnectionState,
  MicState,
  SpeakerState,
  PlaybackState,
  SpeechBox,
  LabelDef,
  Annotation,
  Presence,
  TranscriptLine,
  TrialSummary,
  ErrorNotice,
} from "./session.js";
export {
  renderWizardView,
  renderEndUserView,
  renderAdminView,
  bubbleMenuActions,
  BubbleMenuAction,
  AdminViewOptions,
  ALL_FEATURES,
  COLLAB_EDITOR,
  MIC_CONTROL,
  SPEECH_BOXES,
  CONTENT_PLAYBACK,
  LINE_BREAK,
  PRESENCE_CURSORS,
  LABELS,
  HIGHLIGHTS,
  SUMMARY_NOTES,
  BUBBLE_MENU,
} from "./views.js";
export { Microphone, TextInjectionMicrophone, BrowserMicrophone } from "./audio.js";
