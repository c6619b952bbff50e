// Issues exactly one request down a tracker-looking path and one down
// a content path, both script-initiated so the capture records stacks.
function sendBeacon() {
  return fetch("/trk/pixel.gif?cb=" + Date.now());
}

function loadContent() {
  return fetch("/content/data.json").then(function (res) {
    return res.json();
  });
}

sendBeacon();
loadContent();
